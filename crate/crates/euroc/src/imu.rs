use std::io::Write;
use std::path::Path;

use nalgebra::Vector3;
use viinit::Sample;

use crate::error::{io_error, IngestError, Result};
use crate::table::{self, seconds_since, stamp_ns};

const COLUMNS: [&[&str]; 7] = [
    &["timestamp", "timestamp_ns"],
    &["w_rs_s_x", "w_x"],
    &["w_rs_s_y", "w_y"],
    &["w_rs_s_z", "w_z"],
    &["a_rs_s_x", "a_x"],
    &["a_rs_s_y", "a_y"],
    &["a_rs_s_z", "a_z"],
];

const HEADER: &str = "#timestamp [ns],w_RS_S_x [rad s^-1],w_RS_S_y [rad s^-1],w_RS_S_z [rad s^-1],\
a_RS_S_x [m s^-2],a_RS_S_y [m s^-2],a_RS_S_z [m s^-2]";

/// Loads `timestamp_ns,w_x,w_y,w_z,a_x,a_y,a_z` rows with absolute timestamps in seconds.
pub fn load_imu_csv(path: impl AsRef<Path>) -> Result<Vec<Sample>> {
    load_imu_csv_since(path, 0)
}

/// Like [`load_imu_csv`] with timestamps measured from `origin_ns`, which
/// keeps sub-microsecond resolution for dataset clocks near 1.4e18 ns.
pub fn load_imu_csv_since(path: impl AsRef<Path>, origin_ns: u64) -> Result<Vec<Sample>> {
    Ok(to_samples(table::read(path.as_ref(), &COLUMNS)?, origin_ns))
}

/// Loads with the first row's timestamp as the time origin and returns that origin.
pub fn load_imu_csv_rebased(path: impl AsRef<Path>) -> Result<(u64, Vec<Sample>)> {
    let path = path.as_ref();
    let rows = table::read(path, &COLUMNS)?;
    let origin = rows
        .first()
        .map(|r| r.stamp_ns)
        .ok_or_else(|| IngestError::InvalidArgument(format!("{}: no IMU rows", path.display())))?;
    Ok((origin, to_samples(rows, origin)))
}

fn to_samples(rows: Vec<table::Row>, origin_ns: u64) -> Vec<Sample> {
    rows.into_iter()
        .map(|r| {
            let v = &r.values;
            Sample::new(
                seconds_since(r.stamp_ns, origin_ns),
                Vector3::new(v[0], v[1], v[2]),
                Vector3::new(v[3], v[4], v[5]),
            )
        })
        .collect()
}

pub fn write_imu_csv(path: impl AsRef<Path>, samples: &[Sample], origin_ns: u64) -> Result<()> {
    let path = path.as_ref();
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_error(path))?);
    let mut body = String::with_capacity(samples.len() * 96);
    body.push_str(HEADER);
    body.push('\n');
    for s in samples {
        let (g, a) = (s.gyro, s.accel);
        body.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            stamp_ns(s.t, origin_ns),
            g.x,
            g.y,
            g.z,
            a.x,
            a.y,
            a.z
        ));
    }
    out.write_all(body.as_bytes()).map_err(io_error(path))
}
