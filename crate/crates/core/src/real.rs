//! Scalar abstraction: everything numeric is generic over a floating type.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating scalar used throughout the crate (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Display
    + LowerExp
    + Debug
    + Send
    + Sync
    + 'static
{
    /// Shorthand for embedding an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from(x).expect("literal representable in scalar type")
    }

    /// Embed a `usize` (grid sizes, trial counts).
    #[inline]
    fn of(n: usize) -> Self {
        Self::from(n).expect("usize representable in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}
