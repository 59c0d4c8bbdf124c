use std::path::{Path, PathBuf};

use viinit::synth::{NoiseDensities, SynthOutput};
use viinit::{so3, Sample};

use crate::calib::{write_calibration, Calibration};
use crate::error::{io_error, IngestError, Result};
use crate::groundtruth::{load_groundtruth_csv_since, write_groundtruth_csv, GroundTruthState};
use crate::imu::{load_imu_csv_rebased, write_imu_csv};
use crate::poses::write_pose_file;

const IMU_FILE: &str = "imu0/data.csv";
const GROUNDTRUTH_FILE: &str = "state_groundtruth_estimate0/data.csv";

/// One recording, with every timestamp measured from the first IMU sample.
#[derive(Clone, Debug)]
pub struct Sequence {
    pub origin_ns: u64,
    pub imu: Vec<Sample>,
    /// Absent when the directory has no ground-truth file.
    pub groundtruth: Option<Vec<GroundTruthState>>,
}

/// Directory holding `imu0/`: either `dir/mav0` or `dir` itself.
fn data_root(dir: &Path) -> Result<PathBuf> {
    [dir.join("mav0"), dir.to_path_buf()]
        .into_iter()
        .find(|root| root.join(IMU_FILE).is_file())
        .ok_or_else(|| IngestError::Io {
            path: dir.join("mav0").join(IMU_FILE),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no IMU file in sequence directory"),
        })
}

pub fn load_sequence(dir: impl AsRef<Path>) -> Result<Sequence> {
    let root = data_root(dir.as_ref())?;
    let (origin_ns, imu) = load_imu_csv_rebased(root.join(IMU_FILE))?;
    let gt_path = root.join(GROUNDTRUTH_FILE);
    let groundtruth = if gt_path.is_file() {
        Some(load_groundtruth_csv_since(&gt_path, origin_ns)?)
    } else {
        None
    };
    Ok(Sequence { origin_ns, imu, groundtruth })
}

/// Writes a synthetic run as a sequence directory: `mav0/imu0/data.csv`,
/// `mav0/state_groundtruth_estimate0/data.csv`, keyframe camera poses in
/// `poses.txt` and `calib.txt`. Timestamps are offset by `origin_ns`.
pub fn export_synth(out: &SynthOutput, noise: Option<NoiseDensities>, dir: impl AsRef<Path>, origin_ns: u64) -> Result<()> {
    let dir = dir.as_ref();
    let mav = dir.join("mav0");
    for sub in ["imu0", "state_groundtruth_estimate0"] {
        let path = mav.join(sub);
        std::fs::create_dir_all(&path).map_err(io_error(&path))?;
    }
    write_imu_csv(mav.join(IMU_FILE), &out.imu_samples, origin_ns)?;

    let states: Vec<GroundTruthState> = out
        .states
        .iter()
        .map(|s| GroundTruthState {
            t: s.t,
            position: s.position,
            quaternion: so3::quaternion_from_rotation(&s.rotation),
            velocity: s.velocity,
            bias_g: out.truth.bias_g,
            bias_a: out.truth.bias_a,
        })
        .collect();
    write_groundtruth_csv(mav.join(GROUNDTRUTH_FILE), &states, origin_ns)?;

    let offset = origin_ns as f64 * 1e-9;
    write_pose_file(dir.join("poses.txt"), &out.keyframes, offset)?;

    let noise = noise.unwrap_or(NoiseDensities::euroc());
    let imu_rate = match out.imu_samples.as_slice() {
        [a, b, ..] => 1.0 / (b.t - a.t),
        _ => Calibration::default().imu_rate,
    };
    let calib = Calibration {
        extrinsics: out.extrinsics,
        gyro_noise_density: noise.gyro,
        accel_noise_density: noise.accel,
        imu_rate,
        world_gravity: out.truth.gravity,
    };
    write_calibration(dir.join("calib.txt"), &calib)
}
