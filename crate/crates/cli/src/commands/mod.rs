pub mod cv;
pub mod eval;
pub mod extract;
pub mod gradcheck;
pub mod synth;
pub mod train;
