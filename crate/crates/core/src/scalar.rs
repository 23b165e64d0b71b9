//! Floating-point abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar the grids, kernels and solvers are generic over.
///
/// Implemented for `f32` and `f64`. Tolerances used across the crate
/// (solver residual 1e-10, density floor 1e-300) are calibrated for `f64`;
/// `f32` builds compile and run but only reach single-precision accuracy.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal, saturating to zero/infinity when out of range.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).unwrap_or_else(Self::nan)
    }

    /// Lossy view as `f64`, used for reporting and special functions.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).unwrap_or_else(Self::nan)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Density values below this are treated as exact zeros by the post-hoc
/// functionals (entropy, Fisher information, velocities).
pub const DENSITY_FLOOR: f64 = 1e-300;

/// `DENSITY_FLOOR` in the target precision. Underflows to 0 for `f32`.
#[inline]
pub fn density_floor<S: Scalar>() -> S {
    S::lit(DENSITY_FLOOR)
}
