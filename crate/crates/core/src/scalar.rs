//! Floating-point scalar abstraction: f32 or f64.

use std::fmt::{Debug, Display};

/// Scalar type for all numeric kernels.
///
/// Everything numeric in this crate (tensors, layers, losses, metrics) is
/// generic over `Scalar`. On-disk formats are always 64-bit, so `f32`
/// values round-trip through `f64` losslessly.
pub trait Scalar:
    num_traits::Float
    + num_traits::NumAssignOps
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossless-enough conversion from f64 (exact for f64, rounded for f32).
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to any Scalar")
    }

    /// Widening conversion to f64 (exact for both f32 and f64).
    fn to_f64_exact(self) -> f64 {
        self.to_f64().expect("Scalar widens to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
