//! Batch evaluation of visual-inertial initialization over sliding windows of
//! EuRoC or synthetic sequences.

pub mod config;
pub mod data;
pub mod error;
pub mod metrics;
pub mod report;
pub mod run;

pub use config::{load_synth_config, parse_list, DataSource, Format, PoseSource, RunConfig, SolverId};
pub use data::{load_data, SequenceData, Truth};
pub use error::{HarnessError, Result};
pub use report::{emit_report, read_json, Report, Row, Summary, COLUMNS};
pub use run::{attempt, run_sequence, schedule, sweep, AttemptReport, AttemptStatus, SolverStatus};
