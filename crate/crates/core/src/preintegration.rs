//! Keyframe-to-keyframe IMU preintegration with first-order bias Jacobians and
//! propagated noise covariance.
//!
//! Samples are integrated with forward Euler. Each sample holds until the next
//! sample's timestamp; the last one holds until the caller-supplied interval end.
//! The noise covariance follows the usual linearized recursion on the 9-dim
//! error state `(δφ, δv, δp)` with discrete noise `Σ/Δt` per sample.

use nalgebra::{Matrix3, Matrix6, SMatrix, Vector3};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::so3;

pub type Matrix9<T> = SMatrix<T, 9, 9>;

/// One timestamped gyroscope and accelerometer reading in the body frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImuSample<T: Real> {
    /// Seconds.
    pub t: f64,
    /// rad/s
    pub gyro: Vector3<T>,
    /// m/s²
    pub accel: Vector3<T>,
}

impl<T: Real> ImuSample<T> {
    pub fn new(t: f64, gyro: Vector3<T>, accel: Vector3<T>) -> Self {
        Self { t, gyro, accel }
    }

    pub fn cast<U: Real>(&self) -> ImuSample<U> {
        ImuSample {
            t: self.t,
            gyro: self.gyro.map(|v| U::lit(v.as_f64())),
            accel: self.accel.map(|v| U::lit(v.as_f64())),
        }
    }
}

/// Continuous-time white-noise covariances of the gyroscope and accelerometer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec<T: Real> {
    /// (rad/s)²·s
    pub gyro_cov: Matrix3<T>,
    /// (m/s²)²·s
    pub accel_cov: Matrix3<T>,
}

impl<T: Real> NoiseSpec<T> {
    /// Isotropic noise from datasheet densities (rad/s/√Hz and m/s²/√Hz).
    pub fn from_densities(gyro_density: T, accel_density: T) -> Self {
        Self {
            gyro_cov: Matrix3::identity() * (gyro_density * gyro_density),
            accel_cov: Matrix3::identity() * (accel_density * accel_density),
        }
    }

    /// Noise densities of the EuRoC ADIS16448 IMU.
    pub fn euroc() -> Self {
        Self::from_densities(T::lit(1.6968e-4), T::lit(2.0e-3))
    }

    pub fn zero() -> Self {
        Self {
            gyro_cov: Matrix3::zeros(),
            accel_cov: Matrix3::zeros(),
        }
    }

    /// Checks that both covariances are symmetric positive definite.
    pub fn validate(&self) -> Result<()> {
        for cov in [&self.gyro_cov, &self.accel_cov] {
            let asym = (cov - cov.transpose()).abs().max();
            if !(asym <= T::lit(1e-12) * cov.abs().max()) || cov.cholesky().is_none() {
                return Err(Error::InvalidNoise);
            }
        }
        Ok(())
    }
}

/// Relative rotation, velocity and position between two keyframes, expressed in
/// the body frame of the first, together with their bias Jacobians.
#[derive(Clone, Debug, PartialEq)]
pub struct PreintegratedDelta<T: Real> {
    pub d_rot: Matrix3<T>,
    pub d_vel: Vector3<T>,
    pub d_pos: Vector3<T>,
    /// Integrated time span in seconds.
    pub dt: T,
    pub j_rot_bg: Matrix3<T>,
    pub j_vel_bg: Matrix3<T>,
    pub j_vel_ba: Matrix3<T>,
    pub j_pos_bg: Matrix3<T>,
    pub j_pos_ba: Matrix3<T>,
    /// Covariance of the `(δφ, δv, δp)` error state.
    pub covariance: Matrix9<T>,
    /// Gyroscope bias the deltas were integrated (or last corrected) at.
    pub bias_g: Vector3<T>,
    /// Accelerometer bias the deltas were integrated (or last corrected) at.
    pub bias_a: Vector3<T>,
    /// Sum of raw accelerometer magnitudes, for the excitation check.
    pub accel_norm_sum: T,
    pub num_samples: usize,
}

impl<T: Real> PreintegratedDelta<T> {
    pub fn identity(bias_g: Vector3<T>, bias_a: Vector3<T>) -> Self {
        Self {
            d_rot: Matrix3::identity(),
            d_vel: Vector3::zeros(),
            d_pos: Vector3::zeros(),
            dt: T::zero(),
            j_rot_bg: Matrix3::zeros(),
            j_vel_bg: Matrix3::zeros(),
            j_vel_ba: Matrix3::zeros(),
            j_pos_bg: Matrix3::zeros(),
            j_pos_ba: Matrix3::zeros(),
            covariance: Matrix9::zeros(),
            bias_g,
            bias_a,
            accel_norm_sum: T::zero(),
            num_samples: 0,
        }
    }

    /// Covariance of the rotation residual.
    pub fn cov_rot(&self) -> Matrix3<T> {
        self.covariance.fixed_view::<3, 3>(0, 0).into_owned()
    }

    /// Joint covariance of `(δv, δp)`.
    pub fn cov_vel_pos(&self) -> Matrix6<T> {
        self.covariance.fixed_view::<6, 6>(3, 3).into_owned()
    }

    /// Integrates one sample held for `dt` seconds.
    fn integrate(&mut self, gyro: &Vector3<T>, accel: &Vector3<T>, dt: T, noise: &NoiseSpec<T>) {
        let half = T::lit(0.5);
        let dt2 = dt * dt;
        let w = gyro - self.bias_g;
        let a = accel - self.bias_a;
        let step = so3::exp(&(w * dt));
        let jr = so3::right_jacobian(&(w * dt));
        let a_hat = so3::hat(&a);
        let rot_a_hat = self.d_rot * a_hat;

        let mut f = Matrix9::<T>::identity();
        f.fixed_view_mut::<3, 3>(0, 0).copy_from(&step.transpose());
        f.fixed_view_mut::<3, 3>(3, 0).copy_from(&(-rot_a_hat * dt));
        f.fixed_view_mut::<3, 3>(6, 0).copy_from(&(-rot_a_hat * (half * dt2)));
        f.fixed_view_mut::<3, 3>(6, 3).copy_from(&(Matrix3::identity() * dt));

        let mut g_gyro = SMatrix::<T, 9, 3>::zeros();
        g_gyro.fixed_view_mut::<3, 3>(0, 0).copy_from(&(jr * dt));
        let mut g_acc = SMatrix::<T, 9, 3>::zeros();
        g_acc.fixed_view_mut::<3, 3>(3, 0).copy_from(&(self.d_rot * dt));
        g_acc.fixed_view_mut::<3, 3>(6, 0).copy_from(&(self.d_rot * (half * dt2)));

        self.covariance = f * self.covariance * f.transpose()
            + g_gyro * (noise.gyro_cov / dt) * g_gyro.transpose()
            + g_acc * (noise.accel_cov / dt) * g_acc.transpose();

        // Jacobians use the pre-update rotation and velocity terms.
        self.j_pos_ba += self.j_vel_ba * dt - self.d_rot * (half * dt2);
        self.j_pos_bg += self.j_vel_bg * dt - rot_a_hat * self.j_rot_bg * (half * dt2);
        self.j_vel_ba -= self.d_rot * dt;
        self.j_vel_bg -= rot_a_hat * self.j_rot_bg * dt;
        self.j_rot_bg = step.transpose() * self.j_rot_bg - jr * dt;

        let rot_a = self.d_rot * a;
        self.d_pos += self.d_vel * dt + rot_a * (half * dt2);
        self.d_vel += rot_a * dt;
        self.d_rot *= step;
        self.dt += dt;
        self.accel_norm_sum += accel.norm();
        self.num_samples += 1;
    }

    /// First-order update of the deltas to a new bias linearization point.
    ///
    /// Valid only while the bias change stays small (the rotation update is
    /// `ΔR·Exp(J·δbᵍ)` and velocity/position move linearly in both biases).
    /// Jacobians and covariance are kept as they are.
    pub fn correct_for_bias(&self, bias_g: &Vector3<T>, bias_a: &Vector3<T>) -> Self {
        let dg = bias_g - self.bias_g;
        let da = bias_a - self.bias_a;
        let mut out = self.clone();
        out.d_rot = self.d_rot * so3::exp(&(self.j_rot_bg * dg));
        out.d_vel += self.j_vel_bg * dg + self.j_vel_ba * da;
        out.d_pos += self.j_pos_bg * dg + self.j_pos_ba * da;
        out.bias_g = *bias_g;
        out.bias_a = *bias_a;
        out
    }
}

/// Preintegrates `samples` from the first sample's timestamp up to `t_end`.
pub fn preintegrate<T: Real>(
    samples: &[ImuSample<T>],
    t_end: f64,
    bias_g: &Vector3<T>,
    bias_a: &Vector3<T>,
    noise: &NoiseSpec<T>,
) -> Result<PreintegratedDelta<T>> {
    let first = samples.first().ok_or(Error::EmptySamples)?;
    preintegrate_between(samples, first.t, t_end, bias_g, bias_a, noise)
}

/// Preintegrates over `[t_start, t_end]` with each sample held until the next.
///
/// A first sample stamped before `t_start` contributes only from `t_start`,
/// so an interval can begin between IMU ticks.
pub fn preintegrate_between<T: Real>(
    samples: &[ImuSample<T>],
    t_start: f64,
    t_end: f64,
    bias_g: &Vector3<T>,
    bias_a: &Vector3<T>,
    noise: &NoiseSpec<T>,
) -> Result<PreintegratedDelta<T>> {
    let last = samples.last().ok_or(Error::EmptySamples)?;
    if !(t_end > last.t) || !(t_end > t_start) {
        return Err(Error::BadIntervalEnd { last: last.t.max(t_start), end: t_end });
    }
    let mut delta = PreintegratedDelta::identity(*bias_g, *bias_a);
    for (k, sample) in samples.iter().enumerate() {
        let next = samples.get(k + 1).map_or(t_end, |s| s.t);
        if !(next > sample.t) {
            return Err(Error::NonMonotonicTimestamps { index: k + 1 });
        }
        let from = if k == 0 { sample.t.max(t_start) } else { sample.t };
        if next > from {
            delta.integrate(&sample.gyro, &sample.accel, T::lit(next - from), noise);
        }
    }
    Ok(delta)
}
