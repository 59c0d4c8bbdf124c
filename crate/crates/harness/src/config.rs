use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use viinit::synth::SynthConfig;

use crate::error::{HarnessError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverId {
    Analytic,
    Iterative,
    Multistart,
}

impl SolverId {
    pub const ALL: [SolverId; 3] = [SolverId::Analytic, SolverId::Iterative, SolverId::Multistart];

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "analytic" => Ok(Self::Analytic),
            "iterative" => Ok(Self::Iterative),
            "multistart" => Ok(Self::Multistart),
            other => Err(HarnessError::Config(format!("unknown solver {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    /// EuRoC sequence directory plus an optional calibration file.
    Euroc { dir: PathBuf, calib: Option<PathBuf> },
    Synth(SynthConfig),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoseSource {
    /// Ground-truth body poses with positions divided by `scale`. For
    /// synthetic data the generator's own scale and extrinsics apply instead.
    Groundtruth { scale: f64 },
    /// Camera poses from a TUM-style file.
    File(PathBuf),
}

impl PoseSource {
    /// Parses `groundtruth` or `file:PATH`.
    pub fn parse(s: &str, gt_scale: f64) -> Result<Self> {
        if s == "groundtruth" {
            Ok(Self::Groundtruth { scale: gt_scale })
        } else if let Some(path) = s.strip_prefix("file:") {
            if path.is_empty() {
                return Err(HarnessError::Config("empty pose file path".into()));
            }
            Ok(Self::File(PathBuf::from(path)))
        } else {
            Err(HarnessError::Config(format!("pose source must be groundtruth or file:PATH, got {s:?}")))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub data: DataSource,
    pub poses: PoseSource,
    /// Hz
    pub keyframe_rate: f64,
    /// Seconds between attempt start times.
    pub attempt_interval: f64,
    /// Window lengths in seconds.
    pub windows: Vec<f64>,
    pub solvers: Vec<SolverId>,
    /// Initial scales for the multi-start solver; the iterative solver starts from the first.
    pub scales: Vec<f64>,
    pub seed: u64,
    /// Each solver runs this many times per attempt; the fastest run is
    /// reported, which keeps cold caches from penalizing whichever solver
    /// runs first.
    #[serde(default = "default_timing_repeats")]
    pub timing_repeats: usize,
    pub out: Option<PathBuf>,
    pub format: Format,
}

fn default_timing_repeats() -> usize {
    3
}

impl RunConfig {
    pub fn new(data: DataSource) -> Self {
        Self {
            data,
            poses: PoseSource::Groundtruth { scale: 1.0 },
            keyframe_rate: 4.0,
            attempt_interval: 0.5,
            windows: vec![1.0, 2.0, 5.0, 10.0],
            solvers: SolverId::ALL.to_vec(),
            scales: viinit::reference::DEFAULT_SCALES.to_vec(),
            seed: 0,
            timing_repeats: default_timing_repeats(),
            out: None,
            format: Format::Csv,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if !(self.keyframe_rate > 0.0 && self.keyframe_rate.is_finite()) {
            return bad(format!("keyframe rate must be positive, got {}", self.keyframe_rate));
        }
        if !(self.attempt_interval > 0.0 && self.attempt_interval.is_finite()) {
            return bad(format!("attempt interval must be positive, got {}", self.attempt_interval));
        }
        if self.windows.is_empty() || self.windows.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return bad(format!("window lengths must be positive, got {:?}", self.windows));
        }
        if self.timing_repeats == 0 {
            return bad("timing repeats must be at least 1".into());
        }
        if self.solvers.is_empty() {
            return bad("no solvers selected".into());
        }
        if self.scales.is_empty() || self.scales.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return bad(format!("initial scales must be positive, got {:?}", self.scales));
        }
        if let PoseSource::Groundtruth { scale } = self.poses {
            if !(scale > 0.0 && scale.is_finite()) {
                return bad(format!("ground-truth scale must be positive, got {scale}"));
            }
        }
        if let DataSource::Synth(c) = &self.data {
            c.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        Ok(())
    }
}

/// Reads a TOML synthetic-sequence description; omitted keys take defaults.
pub fn load_synth_config(path: impl AsRef<Path>) -> Result<SynthConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("cannot read synthetic config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|source| HarnessError::SynthConfig { path: path.to_path_buf(), source })
}

/// Splits `1,2.5,4` into numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|_| HarnessError::Config(format!("bad number {f:?} in {s:?}")))
        })
        .collect()
}
