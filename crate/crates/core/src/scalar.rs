//! Scalar abstraction shared by the voting-rule and update mathematics.

use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating point scalar: `f32` or `f64`.
///
/// Every probability, weight and quota in the crate is generic over this
/// trait. The simulator itself runs on `f64`.
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts a literal. Panics only if `T` cannot represent a finite `f64`
    /// at all, which never happens for the two provided implementations.
    fn lit(value: f64) -> Self {
        <Self as num_traits::FromPrimitive>::from_f64(value).expect("finite literal")
    }

    fn as_f64(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    fn half() -> Self {
        Self::lit(0.5)
    }

    fn two() -> Self {
        Self::lit(2.0)
    }
}

impl Real for f32 {}
impl Real for f64 {}
