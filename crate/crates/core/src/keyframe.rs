use nalgebra::{Matrix3, Vector3};

use crate::scalar::Real;

/// Up-to-scale visual pose of the camera at a keyframe.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KeyframePose<T: Real> {
    /// Seconds.
    pub t: f64,
    /// Camera-to-world rotation.
    pub rotation: Matrix3<T>,
    /// Camera position in world, in the vision system's arbitrary units.
    pub position: Vector3<T>,
}

impl<T: Real> KeyframePose<T> {
    pub fn new(t: f64, rotation: Matrix3<T>, position: Vector3<T>) -> Self {
        Self { t, rotation, position }
    }
}

/// Fixed camera/body extrinsic calibration.
///
/// `rot_cb` maps body-frame vectors into the camera frame, so the body
/// orientation is `R = R̄·R_CB`. `t_cb` is the body origin expressed in the
/// camera frame (metres), giving the body position `p = s·p̄ + R̄·t_CB`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extrinsics<T: Real> {
    pub rot_cb: Matrix3<T>,
    pub t_cb: Vector3<T>,
}

impl<T: Real> Default for Extrinsics<T> {
    fn default() -> Self {
        Self {
            rot_cb: Matrix3::identity(),
            t_cb: Vector3::zeros(),
        }
    }
}

impl<T: Real> Extrinsics<T> {
    pub fn body_rotation(&self, pose: &KeyframePose<T>) -> Matrix3<T> {
        pose.rotation * self.rot_cb
    }

    pub fn body_position(&self, pose: &KeyframePose<T>, scale: T) -> Vector3<T> {
        pose.position * scale + pose.rotation * self.t_cb
    }
}
