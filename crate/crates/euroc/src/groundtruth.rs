use std::io::Write;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use viinit::{so3, Pose};

use crate::error::{io_error, IngestError, Result};
use crate::table::{self, seconds_since, stamp_ns};

/// Quaternions further than this from unit norm are rejected instead of
/// renormalized. The published files print six decimals, which alone leaves
/// deviations up to about 1e-6.
pub const QUATERNION_TOL: f64 = 1e-5;

/// Motion-capture state estimate of the IMU body frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroundTruthState {
    pub t: f64,
    pub position: Vector3<f64>,
    /// Body-to-world, `[w, x, y, z]`, unit norm.
    pub quaternion: [f64; 4],
    pub velocity: Vector3<f64>,
    pub bias_g: Vector3<f64>,
    pub bias_a: Vector3<f64>,
}

impl GroundTruthState {
    pub fn rotation(&self) -> Matrix3<f64> {
        let [w, x, y, z] = self.quaternion;
        so3::rotation_from_quaternion(w, x, y, z)
    }

    /// Body pose with the position divided by `scale`, as an up-to-scale
    /// vision system with identity extrinsics would report it.
    pub fn scaled_pose(&self, scale: f64) -> Pose {
        Pose::new(self.t, self.rotation(), self.position / scale)
    }
}

const COLUMNS: [&[&str]; 17] = [
    &["timestamp", "timestamp_ns"],
    &["p_rs_r_x", "p_x"],
    &["p_rs_r_y", "p_y"],
    &["p_rs_r_z", "p_z"],
    &["q_rs_w", "q_w"],
    &["q_rs_x", "q_x"],
    &["q_rs_y", "q_y"],
    &["q_rs_z", "q_z"],
    &["v_rs_r_x", "v_x"],
    &["v_rs_r_y", "v_y"],
    &["v_rs_r_z", "v_z"],
    &["b_w_rs_s_x", "bw_x"],
    &["b_w_rs_s_y", "bw_y"],
    &["b_w_rs_s_z", "bw_z"],
    &["b_a_rs_s_x", "ba_x"],
    &["b_a_rs_s_y", "ba_y"],
    &["b_a_rs_s_z", "ba_z"],
];

const HEADER: &str = "#timestamp,p_RS_R_x [m],p_RS_R_y [m],p_RS_R_z [m],q_RS_w [],q_RS_x [],q_RS_y [],q_RS_z [],\
v_RS_R_x [m s^-1],v_RS_R_y [m s^-1],v_RS_R_z [m s^-1],b_w_RS_S_x [rad s^-1],b_w_RS_S_y [rad s^-1],\
b_w_RS_S_z [rad s^-1],b_a_RS_S_x [m s^-2],b_a_RS_S_y [m s^-2],b_a_RS_S_z [m s^-2]";

pub fn load_groundtruth_csv(path: impl AsRef<Path>) -> Result<Vec<GroundTruthState>> {
    load_groundtruth_csv_since(path, 0)
}

/// Loads ground truth with timestamps measured from `origin_ns`.
pub fn load_groundtruth_csv_since(path: impl AsRef<Path>, origin_ns: u64) -> Result<Vec<GroundTruthState>> {
    let path = path.as_ref();
    table::read(path, &COLUMNS)?
        .into_iter()
        .map(|r| {
            let v = &r.values;
            let q = [v[3], v[4], v[5], v[6]];
            let norm = q.iter().map(|c| c * c).sum::<f64>().sqrt();
            if !((norm - 1.0).abs() <= QUATERNION_TOL) {
                return Err(IngestError::NonUnitQuaternion { path: path.to_path_buf(), line: r.line, norm });
            }
            Ok(GroundTruthState {
                t: seconds_since(r.stamp_ns, origin_ns),
                position: Vector3::new(v[0], v[1], v[2]),
                quaternion: q.map(|c| c / norm),
                velocity: Vector3::new(v[7], v[8], v[9]),
                bias_g: Vector3::new(v[10], v[11], v[12]),
                bias_a: Vector3::new(v[13], v[14], v[15]),
            })
        })
        .collect()
}

pub fn write_groundtruth_csv(path: impl AsRef<Path>, states: &[GroundTruthState], origin_ns: u64) -> Result<()> {
    let path = path.as_ref();
    let mut body = String::with_capacity(states.len() * 256);
    body.push_str(HEADER);
    body.push('\n');
    for s in states {
        let fields: Vec<String> = std::iter::once(stamp_ns(s.t, origin_ns).to_string())
            .chain(
                s.position
                    .iter()
                    .chain(&s.quaternion)
                    .chain(s.velocity.iter())
                    .chain(s.bias_g.iter())
                    .chain(s.bias_a.iter())
                    .map(|v| v.to_string()),
            )
            .collect();
        body.push_str(&fields.join(","));
        body.push('\n');
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(body.as_bytes()))
        .map_err(io_error(path))
}

/// State whose timestamp is closest to `t`, if any.
pub fn nearest_state(states: &[GroundTruthState], t: f64) -> Option<&GroundTruthState> {
    let i = states.partition_point(|s| s.t < t);
    [i.checked_sub(1), Some(i)]
        .into_iter()
        .flatten()
        .filter_map(|k| states.get(k))
        .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
}
