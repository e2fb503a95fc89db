//! Scalar abstractions.
//!
//! The linear parts of the reconstruction chain (Walsh transforms, shuffling,
//! bilinear decay exponents) only need field arithmetic and are written
//! against [`Field`], so they run unchanged over `f32`, `f64` and exact
//! rationals. Everything that touches transcendental functions is written
//! against [`Real`].

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::Neg;

use num_traits::{Float, FloatConst, FromPrimitive, Num, NumAssign};

/// Exact or inexact field element: `f32`, `f64`, `Ratio<i64>`, ...
pub trait Field: Clone + PartialEq + Debug + Num + NumAssign + Neg<Output = Self> {
    /// Embed a small signed integer.
    fn from_int(v: i64) -> Self;
}

impl Field for f32 {
    fn from_int(v: i64) -> Self {
        v as f32
    }
}

impl Field for f64 {
    fn from_int(v: i64) -> Self {
        v as f64
    }
}

impl<I> Field for num_rational::Ratio<I>
where
    I: Clone + num_integer::Integer + NumAssign + Debug + FromPrimitive + Neg<Output = I>,
{
    fn from_int(v: i64) -> Self {
        num_rational::Ratio::from_integer(I::from_i64(v).expect("integer embedding overflow"))
    }
}

/// Floating-point scalar used by every analytic and stochastic routine.
pub trait Real:
    Field + Copy + Float + FloatConst + FromPrimitive + Sum + Display + LowerExp + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 literal not representable")
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        <Self as FromPrimitive>::from_usize(v).expect("usize not representable")
    }

    /// Widen to `f64` for reporting.
    #[inline]
    fn as_f64(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
