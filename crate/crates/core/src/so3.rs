//! SO(3) kernel: exponential and logarithm maps, right Jacobians and
//! quaternion conversions on plain `Matrix3` rotations.
//!
//! Rotations are stored as 3×3 matrices. `log` returns a rotation vector with
//! norm in `[0, π]`. At an angle of exactly π the axis sign is ambiguous; the
//! returned axis is canonicalized so that its first nonzero component is
//! positive.

use nalgebra::{Matrix3, Quaternion, Rotation3, UnitQuaternion, Vector3};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Skew-symmetric matrix `[v]×` such that `[v]× u = v × u`.
#[inline]
pub fn hat<T: Real>(v: &Vector3<T>) -> Matrix3<T> {
    let z = T::zero();
    Matrix3::new(z, -v.z, v.y, v.z, z, -v.x, -v.y, v.x, z)
}

/// Inverse of [`hat`] applied to the skew part of `m`.
#[inline]
pub fn vee<T: Real>(m: &Matrix3<T>) -> Vector3<T> {
    let half = T::lit(0.5);
    Vector3::new(
        (m[(2, 1)] - m[(1, 2)]) * half,
        (m[(0, 2)] - m[(2, 0)]) * half,
        (m[(1, 0)] - m[(0, 1)]) * half,
    )
}

/// Rodrigues exponential map.
pub fn exp<T: Real>(phi: &Vector3<T>) -> Matrix3<T> {
    let theta = phi.norm();
    let k = hat(phi);
    let k2 = k * k;
    if theta < T::lit(T::SMALL_ANGLE) {
        return Matrix3::identity() + k + k2 * T::lit(0.5);
    }
    let half_sin = (theta * T::lit(0.5)).sin();
    let a = theta.sin() / theta;
    // 1 - cos θ written as 2 sin²(θ/2) to avoid cancellation
    let b = T::lit(2.0) * half_sin * half_sin / (theta * theta);
    Matrix3::identity() + k * a + k2 * b
}

/// Largest absolute deviation of `RᵀR` from identity, combined with `|det R - 1|`.
pub fn orthonormality_error<T: Real>(r: &Matrix3<T>) -> T {
    let gram = r.transpose() * r - Matrix3::identity();
    let ortho = gram.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    ortho.max((r.determinant() - T::one()).abs())
}

/// Logarithm map; rejects matrices that are not rotations.
pub fn log<T: Real>(r: &Matrix3<T>) -> Result<Vector3<T>> {
    let err = orthonormality_error(r);
    if !(err <= T::lit(T::ROTATION_TOL)) {
        return Err(Error::InvalidRotation(err.as_f64()));
    }
    Ok(log_unchecked(r))
}

/// Logarithm map without validating the input.
pub fn log_unchecked<T: Real>(r: &Matrix3<T>) -> Vector3<T> {
    let one = T::one();
    let half = T::lit(0.5);
    let cos = ((r.trace() - one) * half).clamp(-one, one);
    // w = sin(θ)·axis
    let w = vee(r);
    let sin = w.norm();

    if cos > T::lit(-0.99) {
        let theta = sin.atan2(cos);
        if theta < T::lit(T::SMALL_ANGLE) {
            return w * (one + theta * theta / T::lit(6.0));
        }
        return w * (theta / sin);
    }

    // Near π the skew part vanishes; recover the axis from the symmetric part,
    // (R + Rᵀ)/2 - cos·I = (1 - cos)·n nᵀ, using its largest diagonal entry.
    let sym = (r + r.transpose()) * half;
    let mut i = 0;
    for j in 1..3 {
        if sym[(j, j)] > sym[(i, i)] {
            i = j;
        }
    }
    let mut col: Vector3<T> = sym.column(i).into_owned();
    col[i] -= cos;
    let mut axis = col.normalize();
    let mut along = axis.dot(&w);
    if along.abs() <= T::default_epsilon() {
        if let Some(first) = axis.iter().copied().find(|c| c.abs() > T::default_epsilon()) {
            if first < T::zero() {
                axis = -axis;
            }
        }
        along = T::zero();
    } else if along < T::zero() {
        axis = -axis;
        along = -along;
    }
    axis * along.atan2(cos)
}

/// Right Jacobian of SO(3): `exp(φ + δ) ≈ exp(φ)·exp(Jr(φ)·δ)`.
pub fn right_jacobian<T: Real>(phi: &Vector3<T>) -> Matrix3<T> {
    let theta = phi.norm();
    let k = hat(phi);
    let k2 = k * k;
    if theta < T::lit(T::SMALL_ANGLE) {
        return Matrix3::identity() - k * T::lit(0.5) + k2 / T::lit(6.0);
    }
    let t2 = theta * theta;
    let half_sin = (theta * T::lit(0.5)).sin();
    let a = T::lit(2.0) * half_sin * half_sin / t2;
    let b = (theta - theta.sin()) / (t2 * theta);
    Matrix3::identity() - k * a + k2 * b
}

/// Inverse of [`right_jacobian`]: `log(exp(φ)·exp(δ)) ≈ φ + Jr⁻¹(φ)·δ`.
pub fn right_jacobian_inverse<T: Real>(phi: &Vector3<T>) -> Matrix3<T> {
    let theta = phi.norm();
    let k = hat(phi);
    let k2 = k * k;
    let c = if theta < T::lit(T::SMALL_ANGLE.sqrt()) {
        T::lit(1.0 / 12.0) + theta * theta / T::lit(720.0)
    } else {
        let t2 = theta * theta;
        T::one() / t2 - (T::one() + theta.cos()) / (T::lit(2.0) * theta * theta.sin())
    };
    Matrix3::identity() + k * T::lit(0.5) + k2 * c
}

/// Rotation matrix from a quaternion given as `(w, x, y, z)`; the quaternion is normalized.
pub fn rotation_from_quaternion<T: Real>(w: T, x: T, y: T, z: T) -> Matrix3<T> {
    UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z))
        .to_rotation_matrix()
        .into_inner()
}

/// Quaternion `[w, x, y, z]` with `w ≥ 0` for a rotation matrix.
pub fn quaternion_from_rotation<T: Real>(r: &Matrix3<T>) -> [T; 4] {
    let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(*r));
    let q = if q.w < T::zero() { -q.into_inner() } else { q.into_inner() };
    [q.w, q.i, q.j, q.k]
}

/// Nearest rotation to `m` (Frobenius sense).
pub fn project_to_rotation<T: Real>(m: &Matrix3<T>) -> Matrix3<T> {
    Rotation3::from_matrix_eps(m, T::default_epsilon(), 100, Rotation3::identity()).into_inner()
}
