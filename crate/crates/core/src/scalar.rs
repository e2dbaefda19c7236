//! Floating-point scalar abstraction.
//!
//! Everything in this crate is generic over [`Real`], so the same code runs
//! in `f32` or `f64`. The concrete aliases exported from the crate root pin
//! `f64`, which is what the command-line tool and the test suites use.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Scalar type for all real-valued quantities (energies, rates, populations).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into the working scalar type.
#[inline]
pub(crate) fn lit<R: Real>(x: f64) -> R {
    R::from_f64(x).expect("f64 literal must be representable")
}

/// Converts a level index into the working scalar type.
#[inline]
pub(crate) fn num<R: Real>(n: usize) -> R {
    R::from_usize(n).expect("index must be representable")
}

/// Hyperbolic cotangent; callers guarantee `x != 0`.
#[inline]
pub(crate) fn coth<R: Real>(x: R) -> R {
    x.tanh().recip()
}
