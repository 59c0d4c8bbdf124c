//! Synthetic trajectories with exactly known initialization parameters.
//!
//! Motion is defined analytically (sums of sinusoids for position and for the
//! rotation vector, or simpler kinds), and ideal measurements are taken from
//! the analytic derivatives at the IMU rate. The reported body states are the
//! forward-Euler propagation of those ideal measurements, so preintegrating the
//! emitted samples reproduces the keyframe states to rounding error. The gap
//! between the propagated and the analytic trajectory is the Euler truncation
//! error and is reported in [`SynthOutput::euler_drift`].

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::accel::GRAVITY_MAGNITUDE;
use crate::error::{Error, Result};
use crate::keyframe::{Extrinsics, KeyframePose};
use crate::preintegration::{ImuSample, NoiseSpec};
use crate::so3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrajectoryKind {
    /// Sums of sinusoids in position and rotation vector.
    Sinusoidal,
    /// Constant linear velocity at a fixed attitude.
    ConstantVelocity,
    Stationary,
}

/// Isotropic continuous-time noise densities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseDensities {
    /// rad/s/√Hz
    pub gyro: f64,
    /// m/s²/√Hz
    pub accel: f64,
}

impl NoiseDensities {
    pub fn euroc() -> Self {
        Self { gyro: 1.6968e-4, accel: 2.0e-3 }
    }

    pub fn spec(&self) -> NoiseSpec<f64> {
        NoiseSpec::from_densities(self.gyro, self.accel)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// Seconds.
    pub duration: f64,
    /// Hz
    pub imu_rate: f64,
    /// Hz
    pub keyframe_rate: f64,
    pub true_scale: f64,
    pub true_bias_g: [f64; 3],
    pub true_bias_a: [f64; 3],
    /// Direction of gravity in the world frame (normalized internally).
    pub gravity_dir: [f64; 3],
    /// Measurement noise; `None` for exact measurements.
    pub noise: Option<NoiseDensities>,
    pub trajectory: TrajectoryKind,
    /// Extrinsic rotation `R_CB` as a `[w, x, y, z]` quaternion.
    pub extrinsic_rotation: [f64; 4],
    /// Extrinsic translation `t_CB` in metres.
    pub extrinsic_translation: [f64; 3],
    /// Seeds both the sinusoid phases and the measurement noise.
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let tilt = 10f64.to_radians();
        Self {
            duration: 5.0,
            imu_rate: 200.0,
            keyframe_rate: 4.0,
            true_scale: 2.3,
            true_bias_g: [0.02, -0.01, 0.005],
            true_bias_a: [0.05, -0.03, 0.02],
            gravity_dir: [0.0, tilt.sin(), -tilt.cos()],
            noise: None,
            trajectory: TrajectoryKind::Sinusoidal,
            extrinsic_rotation: [1.0, 0.0, 0.0, 0.0],
            extrinsic_translation: [0.0, 0.0, 0.0],
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.duration > 0.0) {
            return bad("duration must be positive");
        }
        if !(self.keyframe_rate > 0.0 && self.imu_rate > self.keyframe_rate) {
            return bad("imu_rate must exceed keyframe_rate > 0");
        }
        if !(self.true_scale > 0.0) {
            return bad("true_scale must be positive");
        }
        if Vector3::from(self.gravity_dir).norm() == 0.0 {
            return bad("gravity_dir must be nonzero");
        }
        let ratio = self.imu_rate / self.keyframe_rate;
        if (ratio - ratio.round()).abs() > 1e-9 {
            return bad("imu_rate must be an integer multiple of keyframe_rate");
        }
        Ok(())
    }

    pub fn extrinsics(&self) -> Extrinsics<f64> {
        let [w, x, y, z] = self.extrinsic_rotation;
        Extrinsics {
            rot_cb: so3::rotation_from_quaternion(w, x, y, z),
            t_cb: Vector3::from(self.extrinsic_translation),
        }
    }

    pub fn gravity(&self) -> Vector3<f64> {
        Vector3::from(self.gravity_dir).normalize() * GRAVITY_MAGNITUDE
    }
}

/// Body state at one IMU tick.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BodyState {
    pub t: f64,
    pub rotation: Matrix3<f64>,
    pub velocity: Vector3<f64>,
    pub position: Vector3<f64>,
}

/// Parameters the initializer should recover.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Truth {
    pub scale: f64,
    pub bias_g: Vector3<f64>,
    pub bias_a: Vector3<f64>,
    pub gravity: Vector3<f64>,
}

#[derive(Clone, Debug)]
pub struct SynthOutput {
    pub imu_samples: Vec<ImuSample<f64>>,
    /// Up-to-scale camera poses at keyframe ticks.
    pub keyframes: Vec<KeyframePose<f64>>,
    /// Body states at every IMU tick (one more than there are samples).
    pub states: Vec<BodyState>,
    pub truth: Truth,
    pub extrinsics: Extrinsics<f64>,
    /// Largest keyframe position gap between propagated and analytic motion, metres.
    pub euler_drift: f64,
}

struct Motion {
    kind: TrajectoryKind,
    pos_amp: [f64; 3],
    pos_freq: [f64; 3],
    pos_phase: [f64; 3],
    rot_amp: [f64; 3],
    rot_freq: [f64; 3],
    rot_phase: [f64; 3],
}

const CONSTANT_VELOCITY: [f64; 3] = [0.5, 0.2, 0.05];
/// Attitude (rotation vector) held by the unexcited kinds. Rotating them would
/// sweep the accelerometer bias through the gravity direction and shift the
/// mean specific-force magnitude by up to `‖bᵃ‖`.
const FIXED_ATTITUDE: [f64; 3] = [0.1, -0.2, 0.3];

impl Motion {
    fn new(kind: TrajectoryKind, rng: &mut ChaCha8Rng) -> Self {
        let mut phase = || -> [f64; 3] { std::array::from_fn(|_| rng.random_range(0.0..2.0 * PI)) };
        Self {
            kind,
            pos_amp: [0.25, 0.15, 0.02],
            pos_freq: [0.7, 1.1, 0.9],
            pos_phase: phase(),
            rot_amp: [0.3, 0.3, 0.3],
            rot_freq: [0.3, 0.5, 0.4],
            rot_phase: phase(),
        }
    }

    /// Position, velocity and acceleration in the world frame.
    fn translation(&self, t: f64) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
        match self.kind {
            TrajectoryKind::Stationary => (Vector3::zeros(), Vector3::zeros(), Vector3::zeros()),
            TrajectoryKind::ConstantVelocity => {
                let v = Vector3::from(CONSTANT_VELOCITY);
                (v * t, v, Vector3::zeros())
            }
            TrajectoryKind::Sinusoidal => {
                let mut p = Vector3::zeros();
                let mut v = Vector3::zeros();
                let mut a = Vector3::zeros();
                for i in 0..3 {
                    let w = 2.0 * PI * self.pos_freq[i];
                    let arg = w * t + self.pos_phase[i];
                    p[i] = self.pos_amp[i] * arg.sin();
                    v[i] = self.pos_amp[i] * w * arg.cos();
                    a[i] = -self.pos_amp[i] * w * w * arg.sin();
                }
                (p, v, a)
            }
        }
    }

    /// Rotation vector and its time derivative.
    fn rotation_vector(&self, t: f64) -> (Vector3<f64>, Vector3<f64>) {
        match self.kind {
            TrajectoryKind::Stationary | TrajectoryKind::ConstantVelocity => {
                (Vector3::from(FIXED_ATTITUDE), Vector3::zeros())
            }
            TrajectoryKind::Sinusoidal => {
                let mut phi = Vector3::zeros();
                let mut dphi = Vector3::zeros();
                for i in 0..3 {
                    let w = 2.0 * PI * self.rot_freq[i];
                    let arg = w * t + self.rot_phase[i];
                    phi[i] = self.rot_amp[i] * arg.sin();
                    dphi[i] = self.rot_amp[i] * w * arg.cos();
                }
                (phi, dphi)
            }
        }
    }

    /// Body-to-world rotation and body-frame angular velocity.
    fn attitude(&self, t: f64) -> (Matrix3<f64>, Vector3<f64>) {
        let (phi, dphi) = self.rotation_vector(t);
        (so3::exp(&phi), so3::right_jacobian(&phi) * dphi)
    }
}

/// Generates a synthetic sequence from `config`.
pub fn generate(config: &SynthConfig) -> Result<SynthOutput> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let motion = Motion::new(config.trajectory, &mut rng);
    let dt = 1.0 / config.imu_rate;
    let n = (config.duration * config.imu_rate).round() as usize;
    let gravity = config.gravity();
    let bias_g = Vector3::from(config.true_bias_g);
    let bias_a = Vector3::from(config.true_bias_a);

    let (p0, v0, a0) = motion.translation(0.0);
    let mut rot = motion.attitude(0.0).0;
    // half-step offsets keep the Euler velocity and position errors zero-mean
    let mut vel = v0 - a0 * (0.5 * dt);
    let mut pos = p0 - v0 * (0.5 * dt);

    let mut samples = Vec::with_capacity(n);
    let mut states = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 * dt;
        states.push(BodyState { t, rotation: rot, velocity: vel, position: pos });
        if k == n {
            break;
        }
        let (_, omega) = motion.attitude(t);
        let (_, _, acc) = motion.translation(t);
        let specific = rot.transpose() * (acc - gravity);
        samples.push(ImuSample::new(t, omega + bias_g, specific + bias_a));

        let world_acc = rot * specific + gravity;
        pos += vel * dt + world_acc * (0.5 * dt * dt);
        vel += world_acc * dt;
        rot *= so3::exp(&(omega * dt));
    }

    if let Some(noise) = config.noise {
        samples = perturb_measurements(&samples, &noise.spec(), config.seed.wrapping_add(0x9e37_79b9));
    }

    let extrinsics = config.extrinsics();
    let stride = (config.imu_rate / config.keyframe_rate).round() as usize;
    let mut keyframes = Vec::new();
    let mut euler_drift = 0.0f64;
    for state in states.iter().step_by(stride) {
        keyframes.push(camera_pose(state, &extrinsics, config.true_scale));
        euler_drift = euler_drift.max((state.position - motion.translation(state.t).0).norm());
    }

    Ok(SynthOutput {
        imu_samples: samples,
        keyframes,
        states,
        truth: Truth {
            scale: config.true_scale,
            bias_g,
            bias_a,
            gravity,
        },
        extrinsics,
        euler_drift,
    })
}

/// Up-to-scale camera pose seen by the vision system for a body state.
fn camera_pose(state: &BodyState, extrinsics: &Extrinsics<f64>, scale: f64) -> KeyframePose<f64> {
    let rotation = state.rotation * extrinsics.rot_cb.transpose();
    let position = (state.position - rotation * extrinsics.t_cb) / scale;
    KeyframePose::new(state.t, rotation, position)
}

impl SynthOutput {
    /// Camera poses at every IMU tick, for keyframe selection at other rates.
    pub fn camera_poses(&self) -> Vec<KeyframePose<f64>> {
        self.states
            .iter()
            .map(|s| camera_pose(s, &self.extrinsics, self.truth.scale))
            .collect()
    }
}

/// Lower-triangular square root of a symmetric PSD matrix (zero-safe).
fn psd_sqrt(m: &Matrix3<f64>) -> Matrix3<f64> {
    let eig = m.symmetric_eigen();
    let d = Matrix3::from_diagonal(&eig.eigenvalues.map(|v| v.max(0.0).sqrt()));
    eig.eigenvectors * d
}

/// Adds i.i.d. Gaussian noise with covariance `Σ/Δt` to every sample.
///
/// `Δt` is the gap to the next sample (the last sample reuses the previous gap).
/// Deterministic in `seed`.
pub fn perturb_measurements(samples: &[ImuSample<f64>], noise: &NoiseSpec<f64>, seed: u64) -> Vec<ImuSample<f64>> {
    let gyro_sqrt = psd_sqrt(&noise.gyro_cov);
    let accel_sqrt = psd_sqrt(&noise.accel_cov);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal3 = |rng: &mut ChaCha8Rng| -> Vector3<f64> {
        Vector3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal))
    };
    let mut last_dt = 1.0;
    samples
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let dt = samples.get(k + 1).map_or(last_dt, |next| next.t - s.t);
            last_dt = dt;
            let scale = 1.0 / dt.sqrt();
            let mut out = *s;
            out.gyro += gyro_sqrt * normal3(&mut rng) * scale;
            out.accel += accel_sqrt * normal3(&mut rng) * scale;
            out
        })
        .collect()
}
