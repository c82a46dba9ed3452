use std::fmt::{Debug, Display};
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::Float;

/// Floating-point scalar the numeric core is generic over: `f32` or `f64`.
///
/// `Float` pulls in `NumCast`, so literals convert with
/// `S::from(x).unwrap()`.
pub trait Scalar:
    Float
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Cast an `f64` constant into the working scalar.
#[inline]
pub fn cast<S: Scalar>(v: f64) -> S {
    S::from(v).expect("f64 constant must fit the working scalar")
}
