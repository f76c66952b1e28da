//! Scalar abstraction: the numerics are written against `f32`/`f64` through
//! a single trait so the core stays independent of the working precision.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, RemAssign, SubAssign};

/// Floating-point scalar: `f32` or `f64`.
pub trait Scalar:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + RemAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`, for literals in generic code.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// `2π`.
    fn two_pi() -> Self {
        Self::PI() + Self::PI()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Cotangent; `cot(x) = cos(x)/sin(x)`.
#[inline]
pub fn cot<S: Scalar>(x: S) -> S {
    x.tan().recip()
}

/// Squared cosecant; `csc²(x) = 1/sin²(x)`.
#[inline]
pub fn csc2<S: Scalar>(x: S) -> S {
    let s = x.sin();
    (s * s).recip()
}
