use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {msg}", path.display())]
    Parse { path: PathBuf, line: u64, msg: String },
    #[error("{}: unexpected header {found:?}, expected columns {expected}", path.display())]
    Header { path: PathBuf, found: String, expected: String },
    #[error("{}:{line}: timestamp does not increase", path.display())]
    NonMonotonic { path: PathBuf, line: u64 },
    #[error("{}:{line}: quaternion norm {norm} is not unit", path.display())]
    NonUnitQuaternion { path: PathBuf, line: u64, norm: f64 },
    #[error("no pose within {max_gap} s of keyframe tick {tick}")]
    MissingKeyframe { tick: f64, max_gap: f64 },
    #[error("no IMU samples in [{start}, {end})")]
    EmptySlice { start: f64, end: f64 },
    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, IngestError>;

pub(crate) fn io_error(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> IngestError + '_ {
    move |source| IngestError::Io { path: path.to_path_buf(), source }
}
