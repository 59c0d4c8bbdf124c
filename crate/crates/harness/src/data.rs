//! Everything a sweep needs from one sequence, whatever its origin.

use nalgebra::Vector3;
use viinit::synth;
use viinit::{Extrinsics, Noise, Pose, Sample};
use viinit_euroc::{self as euroc, Calibration, GroundTruthState};

use crate::config::{DataSource, PoseSource, RunConfig};
use crate::error::{HarnessError, Result};

#[derive(Clone, Debug)]
pub enum BiasTruth {
    Constant { bias_g: Vector3<f64>, bias_a: Vector3<f64> },
    /// Time-varying estimates; the state nearest the attempt start is used.
    Track(Vec<GroundTruthState>),
}

impl BiasTruth {
    pub fn at(&self, t: f64) -> Option<(Vector3<f64>, Vector3<f64>)> {
        match self {
            Self::Constant { bias_g, bias_a } => Some((*bias_g, *bias_a)),
            Self::Track(states) => euroc::nearest_state(states, t).map(|s| (s.bias_g, s.bias_a)),
        }
    }
}

/// Reference values for the error metrics; `None` where unknown.
#[derive(Clone, Debug)]
pub struct Truth {
    pub scale: Option<f64>,
    pub gravity: Option<Vector3<f64>>,
    pub biases: Option<BiasTruth>,
}

#[derive(Clone, Debug)]
pub struct SequenceData {
    pub imu: Vec<Sample>,
    /// Time-sorted camera poses to pick keyframes from.
    pub poses: Vec<Pose>,
    pub extrinsics: Extrinsics<f64>,
    pub noise: Noise,
    pub truth: Truth,
}

pub fn load_data(config: &RunConfig) -> Result<SequenceData> {
    match &config.data {
        DataSource::Synth(synth_config) => from_synth(synth_config, &config.poses, config.seed),
        DataSource::Euroc { dir, calib } => {
            let calib = match calib {
                Some(path) => euroc::load_calibration(path)?,
                None => Calibration::default(),
            };
            from_euroc(euroc::load_sequence(dir)?, &calib, &config.poses)
        }
    }
}

/// Builds sweep data from a generated sequence; `seed` replaces the config's seed.
pub fn from_synth(config: &synth::SynthConfig, poses: &PoseSource, seed: u64) -> Result<SequenceData> {
    let config = synth::SynthConfig { seed, ..config.clone() };
    let out = synth::generate(&config).map_err(|e| HarnessError::Config(e.to_string()))?;
    let noise = config.noise.unwrap_or(synth::NoiseDensities::euroc()).spec();
    let (poses, known_frame) = match poses {
        PoseSource::Groundtruth { .. } => (out.camera_poses(), true),
        PoseSource::File(path) => (euroc::load_pose_file(path, 0.0)?, false),
    };
    let t = out.truth;
    Ok(SequenceData {
        imu: out.imu_samples,
        poses,
        extrinsics: out.extrinsics,
        noise,
        truth: Truth {
            scale: known_frame.then_some(t.scale),
            gravity: known_frame.then_some(t.gravity),
            biases: Some(BiasTruth::Constant { bias_g: t.bias_g, bias_a: t.bias_a }),
        },
    })
}

/// Builds sweep data from a loaded EuRoC sequence.
///
/// Ground-truth poses are body poses, so the extrinsics become identity and
/// the known scale and world gravity are available as truth. Poses from a file
/// live in an unknown frame and scale, leaving only the biases to compare.
pub fn from_euroc(seq: euroc::Sequence, calib: &Calibration, poses: &PoseSource) -> Result<SequenceData> {
    let noise = calib.noise();
    noise.validate()?;
    let offset = seq.origin_ns as f64 * 1e-9;
    let groundtruth = seq.groundtruth;
    let (poses, extrinsics, scale, gravity) = match poses {
        PoseSource::Groundtruth { scale } => {
            let gt = groundtruth
                .as_ref()
                .ok_or_else(|| HarnessError::Config("ground-truth poses requested but the sequence has none".into()))?;
            let poses = gt.iter().map(|s| s.scaled_pose(*scale)).collect();
            (poses, Extrinsics::default(), Some(*scale), Some(calib.world_gravity))
        }
        PoseSource::File(path) => (euroc::load_pose_file(path, offset)?, calib.extrinsics, None, None),
    };
    Ok(SequenceData {
        imu: seq.imu,
        poses,
        extrinsics,
        noise,
        truth: Truth { scale, gravity, biases: groundtruth.map(BiasTruth::Track) },
    })
}
