use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Ingest(#[from] viinit_euroc::IngestError),
    #[error(transparent)]
    Core(#[from] viinit::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    SynthConfig {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("zero-length vector in gravity error")]
    ZeroVector,
}

impl HarnessError {
    /// `true` for mistakes in the requested configuration rather than in the data.
    pub fn is_config(&self) -> bool {
        matches!(self, Self::Config(_) | Self::SynthConfig { .. })
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
