//! Convolutional gated recurrent network for multi-label tagging of stereo
//! audio chunks.
//!
//! The crate is organized as a pipeline:
//!
//! * [`tensor`], [`adam`], [`rng`], [`gradcheck`] — dense numerics, the Adam
//!   optimizer, a seeded portable RNG and a finite-difference gradient
//!   checker. Everything is generic over the working scalar ([`Scalar`],
//!   `f32` or `f64`); tests run the 64-bit instantiation, training defaults
//!   to 32-bit.
//! * [`dsp`] — framing, STFT, mel filterbank, the basic per-frame features
//!   (mel filterbank energies, log spectrogram, raw frames) and the stereo
//!   spatial features (level / phase / magnitude differences between
//!   channels).
//! * [`model`] — the network itself: per-frame 1-D convolution with global
//!   max pooling on one or two feature streams, a stacked bidirectional GRU,
//!   a feed-forward sigmoid readout, binary cross-entropy, and hand-written
//!   backward passes for all of it.
//! * [`train`] — mini-batch training with early stopping, cross-validation
//!   orchestration and checkpointing.
//! * [`eval`] — per-tag equal error rate with an interpolated threshold
//!   sweep.
//! * [`data`] — WAV ingestion with 48 kHz -> 16 kHz decimation, manifest
//!   parsing and a seeded synthetic stereo dataset generator.

// Index loops in the numeric kernels keep the accumulation order explicit.
#![allow(clippy::needless_range_loop)]

pub mod adam;
pub mod data;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod model;
pub mod rng;
pub mod scalar;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use rng::Rng;
pub use scalar::Scalar;
pub use tensor::Tensor2;

/// Working precision for training and checkpoints (checkpoints store 32-bit
/// floats, so the 32-bit pipeline round-trips bit-exactly).
pub type TrainScalar = f32;
/// Precision used by the test oracles and gradient checks.
pub type CheckScalar = f64;

pub type Tensor2F32 = Tensor2<f32>;
pub type Tensor2F64 = Tensor2<f64>;
