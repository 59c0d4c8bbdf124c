//! Flat `key = value` calibration files.
//!
//! ```text
//! # camera-to-body rotation as w x y z, translation in metres
//! extrinsic_rotation = 1 0 0 0
//! extrinsic_translation = 0 0 0
//! gyro_noise_density = 1.6968e-4
//! accel_noise_density = 2.0e-3
//! imu_rate = 200
//! world_gravity = 0 0 -9.81
//! ```
//!
//! Every key is optional; omitted keys keep the [`Calibration::default`] value.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use nalgebra::Vector3;
use viinit::{so3, Extrinsics, Noise, GRAVITY_MAGNITUDE};

use crate::error::{io_error, IngestError, Result};
use crate::groundtruth::QUATERNION_TOL;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Calibration {
    pub extrinsics: Extrinsics<f64>,
    /// Continuous-time gyroscope noise density, rad/s/√Hz.
    pub gyro_noise_density: f64,
    /// Continuous-time accelerometer noise density, m/s²/√Hz.
    pub accel_noise_density: f64,
    pub imu_rate: f64,
    /// Gravity in the ground-truth world frame, used only for evaluation.
    pub world_gravity: Vector3<f64>,
}

impl Default for Calibration {
    fn default() -> Self {
        Self {
            extrinsics: Extrinsics::default(),
            gyro_noise_density: 1.6968e-4,
            accel_noise_density: 2.0e-3,
            imu_rate: 200.0,
            world_gravity: Vector3::new(0.0, 0.0, -GRAVITY_MAGNITUDE),
        }
    }
}

impl Calibration {
    pub fn noise(&self) -> Noise {
        Noise::from_densities(self.gyro_noise_density, self.accel_noise_density)
    }
}

pub fn load_calibration(path: impl AsRef<Path>) -> Result<Calibration> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(io_error(path))?;
    let mut calib = Calibration::default();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = (i + 1) as u64;
        let err = |msg: String| IngestError::Parse { path: path.to_path_buf(), line, msg };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .or_else(|| content.split_once(':'))
            .ok_or_else(|| err(format!("expected key = value, found {content:?}")))?;
        let key = key.trim();
        if !seen.insert(key.to_string()) {
            return Err(err(format!("duplicate key {key}")));
        }
        let numbers = value
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|f| !f.is_empty())
            .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| err(format!("bad number in {value:?}")))?;
        let want = |n: usize| -> Result<()> {
            if numbers.len() == n {
                Ok(())
            } else {
                Err(err(format!("{key} takes {n} values, found {}", numbers.len())))
            }
        };
        let positive = |v: f64| -> Result<f64> {
            if v > 0.0 {
                Ok(v)
            } else {
                Err(err(format!("{key} must be positive")))
            }
        };
        match key {
            "extrinsic_rotation" => {
                want(4)?;
                let norm = numbers.iter().map(|c| c * c).sum::<f64>().sqrt();
                if !((norm - 1.0).abs() <= QUATERNION_TOL) {
                    return Err(IngestError::NonUnitQuaternion { path: path.to_path_buf(), line, norm });
                }
                let q: Vec<f64> = numbers.iter().map(|c| c / norm).collect();
                calib.extrinsics.rot_cb = so3::rotation_from_quaternion(q[0], q[1], q[2], q[3]);
            }
            "extrinsic_translation" => {
                want(3)?;
                calib.extrinsics.t_cb = Vector3::new(numbers[0], numbers[1], numbers[2]);
            }
            "gyro_noise_density" => {
                want(1)?;
                calib.gyro_noise_density = positive(numbers[0])?;
            }
            "accel_noise_density" => {
                want(1)?;
                calib.accel_noise_density = positive(numbers[0])?;
            }
            "imu_rate" => {
                want(1)?;
                calib.imu_rate = positive(numbers[0])?;
            }
            "world_gravity" => {
                want(3)?;
                let g = Vector3::new(numbers[0], numbers[1], numbers[2]);
                if g.norm() == 0.0 {
                    return Err(err("world_gravity must be nonzero".into()));
                }
                calib.world_gravity = g;
            }
            _ => return Err(err(format!("unknown key {key}"))),
        }
    }
    Ok(calib)
}

pub fn write_calibration(path: impl AsRef<Path>, calib: &Calibration) -> Result<()> {
    let path = path.as_ref();
    let [w, x, y, z] = so3::quaternion_from_rotation(&calib.extrinsics.rot_cb);
    let t = calib.extrinsics.t_cb;
    let g = calib.world_gravity;
    let body = format!(
        "extrinsic_rotation = {w} {x} {y} {z}\n\
         extrinsic_translation = {} {} {}\n\
         gyro_noise_density = {}\n\
         accel_noise_density = {}\n\
         imu_rate = {}\n\
         world_gravity = {} {} {}\n",
        t.x, t.y, t.z, calib.gyro_noise_density, calib.accel_noise_density, calib.imu_rate, g.x, g.y, g.z
    );
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(body.as_bytes()))
        .map_err(io_error(path))
}
