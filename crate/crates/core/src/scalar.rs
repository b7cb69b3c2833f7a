//! Floating-point abstraction shared by the numeric layers.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar used by the linear algebra, PLS and Gaussian-process code.
///
/// Implemented for `f32` and `f64`. Optimizers that drive the numeric
/// layers (COBYLA, the evolutionary search) operate in `f64` and convert
/// through [`Scalar::of`] / [`Scalar::to_f64_lossy`].
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + Send + Sync + 'static
{
    /// Machine-precision-dependent floor used when a strictly positive value is required.
    fn tiny() -> Self;

    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable in every Scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    fn tiny() -> Self {
        1e-30
    }
}

impl Scalar for f64 {
    fn tiny() -> Self {
        1e-300
    }
}
