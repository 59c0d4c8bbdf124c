//! Whitespace-separated pose files, one `timestamp_s p_x p_y p_z q_x q_y q_z q_w`
//! per line (the TUM trajectory layout). `#` starts a comment.

use std::io::Write;
use std::path::Path;

use nalgebra::Vector3;
use viinit::{so3, Pose};

use crate::error::{io_error, IngestError, Result};
use crate::groundtruth::QUATERNION_TOL;

/// Loads camera-to-world keyframe poses. `time_offset` is subtracted from
/// every timestamp so the poses share the IMU time origin.
pub fn load_pose_file(path: impl AsRef<Path>, time_offset: f64) -> Result<Vec<Pose>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(io_error(path))?;
    let mut poses: Vec<Pose> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = (i + 1) as u64;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields = content
            .split_whitespace()
            .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| IngestError::Parse { path: path.to_path_buf(), line, msg: format!("bad number in {content:?}") })?;
        let [t, px, py, pz, qx, qy, qz, qw] = fields[..] else {
            return Err(IngestError::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("expected 8 fields, found {}", fields.len()),
            });
        };
        let norm = (qx * qx + qy * qy + qz * qz + qw * qw).sqrt();
        if !((norm - 1.0).abs() <= QUATERNION_TOL) {
            return Err(IngestError::NonUnitQuaternion { path: path.to_path_buf(), line, norm });
        }
        let t = t - time_offset;
        if poses.last().is_some_and(|p| t <= p.t) {
            return Err(IngestError::NonMonotonic { path: path.to_path_buf(), line });
        }
        let rotation = so3::rotation_from_quaternion(qw, qx, qy, qz);
        poses.push(Pose::new(t, rotation, Vector3::new(px, py, pz)));
    }
    Ok(poses)
}

pub fn write_pose_file(path: impl AsRef<Path>, poses: &[Pose], time_offset: f64) -> Result<()> {
    let path = path.as_ref();
    let mut body = String::from("# timestamp_s p_x p_y p_z q_x q_y q_z q_w\n");
    for p in poses {
        let [w, x, y, z] = so3::quaternion_from_rotation(&p.rotation);
        body.push_str(&format!(
            "{} {} {} {} {} {} {} {}\n",
            p.t + time_offset,
            p.position.x,
            p.position.y,
            p.position.z,
            x,
            y,
            z,
            w
        ));
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(body.as_bytes()))
        .map_err(io_error(path))
}
