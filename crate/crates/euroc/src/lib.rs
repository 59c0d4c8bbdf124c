//! EuRoC-format ingestion: IMU and ground-truth CSVs, TUM-style keyframe pose
//! files, key-value calibration, keyframe selection at a fixed rate and IMU
//! slicing. Writers mirror each loader so synthetic runs can be exported.

pub mod calib;
pub mod error;
pub mod groundtruth;
pub mod imu;
pub mod poses;
pub mod select;
pub mod sequence;
mod table;

pub use calib::{load_calibration, write_calibration, Calibration};
pub use error::{IngestError, Result};
pub use groundtruth::{load_groundtruth_csv, load_groundtruth_csv_since, nearest_state, write_groundtruth_csv, GroundTruthState};
pub use imu::{load_imu_csv, load_imu_csv_rebased, load_imu_csv_since, write_imu_csv};
pub use poses::{load_pose_file, write_pose_file};
pub use select::{select_keyframes, slice_imu};
pub use sequence::{export_synth, load_sequence, Sequence};
pub use table::{seconds_since, stamp_ns};
