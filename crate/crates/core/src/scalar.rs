//! Scalar abstraction shared by every numeric routine in the crate.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point type the solvers are generic over: `f32` or `f64`.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive {
    /// Rotation angle below which SO(3) maps switch to their Taylor expansions.
    const SMALL_ANGLE: f64;
    /// Largest tolerated deviation of `RᵀR` from identity (and of `det R` from one).
    const ROTATION_TOL: f64;
    /// Relative gravity-norm slack for accepting a multiplier root.
    const FEASIBILITY_TOL: f64;
    /// Relative imaginary part below which a companion eigenvalue counts as real.
    const REAL_ROOT_TOL: f64;

    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite value")
    }
}

impl Real for f64 {
    const SMALL_ANGLE: f64 = 1e-8;
    const ROTATION_TOL: f64 = 1e-6;
    const FEASIBILITY_TOL: f64 = 1e-6;
    const REAL_ROOT_TOL: f64 = 1e-8;
}

impl Real for f32 {
    const SMALL_ANGLE: f64 = 1e-4;
    const ROTATION_TOL: f64 = 1e-4;
    const FEASIBILITY_TOL: f64 = 1e-2;
    const REAL_ROOT_TOL: f64 = 1e-3;
}
