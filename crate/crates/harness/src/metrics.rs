use nalgebra::Vector3;

use crate::error::{HarnessError, Result};

/// Angle between two gravity estimates, degrees in `[0, 180]`.
pub fn gravity_angle_error(estimate: &Vector3<f64>, truth: &Vector3<f64>) -> Result<f64> {
    let (a, b) = (estimate.norm(), truth.norm());
    if a == 0.0 || b == 0.0 {
        return Err(HarnessError::ZeroVector);
    }
    Ok((estimate.dot(truth) / (a * b)).clamp(-1.0, 1.0).acos().to_degrees())
}

/// `100·|ŝ - s| / s`
pub fn scale_error(estimate: f64, truth: f64) -> f64 {
    100.0 * (estimate - truth).abs() / truth
}

/// Magnitude of the bias error vector.
pub fn bias_error(estimate: &Vector3<f64>, truth: &Vector3<f64>) -> f64 {
    (estimate - truth).norm()
}
