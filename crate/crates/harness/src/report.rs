//! Flat per-attempt, per-solver records and their CSV/JSON emission.
//!
//! CSV columns, in order (see [`COLUMNS`]): schema_version, seed, t_attempt,
//! window_len, num_keyframes, excitation_ok, attempt_status, warmup, solver,
//! solver_status, scale, bias_g_{x,y,z}, bias_a_{x,y,z}, gravity_{x,y,z},
//! cost, iterations, converged, solve_time_us, preintegration_us, gyro_us,
//! blocks_us, total_us, scale_err_pct, gravity_angle_err_deg, bias_g_err_mag,
//! bias_a_err_mag, error. Empty cells are absent values.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{Format, RunConfig, SolverId};
use crate::error::{HarnessError, Result};
use crate::run::{AttemptReport, AttemptStatus, SolverStatus};

pub const SCHEMA_VERSION: u32 = 1;

pub const COLUMNS: [&str; 33] = [
    "schema_version",
    "seed",
    "t_attempt",
    "window_len",
    "num_keyframes",
    "excitation_ok",
    "attempt_status",
    "warmup",
    "solver",
    "solver_status",
    "scale",
    "bias_g_x",
    "bias_g_y",
    "bias_g_z",
    "bias_a_x",
    "bias_a_y",
    "bias_a_z",
    "gravity_x",
    "gravity_y",
    "gravity_z",
    "cost",
    "iterations",
    "converged",
    "solve_time_us",
    "preintegration_us",
    "gyro_us",
    "blocks_us",
    "total_us",
    "scale_err_pct",
    "gravity_angle_err_deg",
    "bias_g_err_mag",
    "bias_a_err_mag",
    "error",
];

/// One solver's outcome on one attempt. Field order matches [`COLUMNS`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub schema_version: u32,
    pub seed: u64,
    pub t_attempt: f64,
    pub window_len: f64,
    pub num_keyframes: usize,
    pub excitation_ok: Option<bool>,
    pub attempt_status: AttemptStatus,
    pub warmup: bool,
    pub solver: SolverId,
    pub solver_status: SolverStatus,
    pub scale: Option<f64>,
    pub bias_g_x: Option<f64>,
    pub bias_g_y: Option<f64>,
    pub bias_g_z: Option<f64>,
    pub bias_a_x: Option<f64>,
    pub bias_a_y: Option<f64>,
    pub bias_a_z: Option<f64>,
    pub gravity_x: Option<f64>,
    pub gravity_y: Option<f64>,
    pub gravity_z: Option<f64>,
    pub cost: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub solve_time_us: f64,
    pub preintegration_us: f64,
    pub gyro_us: f64,
    pub blocks_us: f64,
    pub total_us: f64,
    pub scale_err_pct: Option<f64>,
    pub gravity_angle_err_deg: Option<f64>,
    pub bias_g_err_mag: Option<f64>,
    pub bias_a_err_mag: Option<f64>,
    pub error: Option<String>,
}

pub fn rows(reports: &[AttemptReport], seed: u64) -> Vec<Row> {
    let mut out: Vec<Row> = reports
        .iter()
        .flat_map(|a| {
            a.solvers.iter().map(move |s| {
                let sol = s.solution.as_ref();
                let bias_g = sol.map(|x| x.bias_g).or(a.bias_g);
                let comp = |v: Option<nalgebra::Vector3<f64>>, i: usize| v.map(|v| v[i]);
                Row {
                    schema_version: SCHEMA_VERSION,
                    seed,
                    t_attempt: a.t_attempt,
                    window_len: a.window_len,
                    num_keyframes: a.num_keyframes,
                    excitation_ok: a.excitation_ok,
                    attempt_status: a.status,
                    warmup: a.warmup,
                    solver: s.solver,
                    solver_status: s.status,
                    scale: sol.map(|x| x.scale),
                    bias_g_x: comp(bias_g, 0),
                    bias_g_y: comp(bias_g, 1),
                    bias_g_z: comp(bias_g, 2),
                    bias_a_x: comp(sol.map(|x| x.bias_a), 0),
                    bias_a_y: comp(sol.map(|x| x.bias_a), 1),
                    bias_a_z: comp(sol.map(|x| x.bias_a), 2),
                    gravity_x: comp(sol.map(|x| x.gravity), 0),
                    gravity_y: comp(sol.map(|x| x.gravity), 1),
                    gravity_z: comp(sol.map(|x| x.gravity), 2),
                    cost: sol.map(|x| x.cost),
                    iterations: sol.map(|x| x.iterations),
                    converged: sol.map(|x| x.converged),
                    solve_time_us: s.solve_time_us,
                    preintegration_us: a.times.preintegration_us,
                    gyro_us: a.times.gyro_us,
                    blocks_us: a.times.blocks_us,
                    total_us: a.times.total_us,
                    scale_err_pct: s.errors.scale_err_pct,
                    gravity_angle_err_deg: s.errors.gravity_angle_err_deg,
                    bias_g_err_mag: s.errors.bias_g_err_mag,
                    bias_a_err_mag: s.errors.bias_a_err_mag,
                    error: s.error.clone().or_else(|| a.error.clone()),
                }
            })
        })
        .collect();
    out.sort_by(|a, b| {
        a.t_attempt
            .total_cmp(&b.t_attempt)
            .then(a.window_len.total_cmp(&b.window_len))
            .then(a.solver.cmp(&b.solver))
    });
    out
}

/// Means over the records that have each metric.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub count: usize,
    pub mean_scale_err_pct: Option<f64>,
    pub mean_gravity_angle_err_deg: Option<f64>,
    pub mean_bias_g_err_mag: Option<f64>,
    pub mean_bias_a_err_mag: Option<f64>,
    /// Warm-up attempt excluded.
    pub mean_solve_time_us: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub solver: SolverId,
    pub solved: usize,
    pub failed: usize,
    pub converged: usize,
    /// Every solved record.
    pub all: Aggregate,
    /// Solved records that reported convergence.
    pub converged_only: Aggregate,
}

/// Analytic solver against one iterative baseline, over non-warm-up
/// attempts where both solved.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Speedup {
    pub baseline: SolverId,
    pub attempts: usize,
    /// Fraction of those attempts where the analytic solve was faster.
    pub analytic_faster_fraction: Option<f64>,
    /// Total baseline time over total analytic time.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub attempts_total: usize,
    pub attempts_solved: usize,
    pub attempts_discarded: usize,
    pub attempts_failed: usize,
    pub solvers: Vec<SolverSummary>,
    pub speedups: Vec<Speedup>,
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values.flatten().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn aggregate(rows: &[&Row]) -> Aggregate {
    Aggregate {
        count: rows.len(),
        mean_scale_err_pct: mean(rows.iter().map(|r| r.scale_err_pct)),
        mean_gravity_angle_err_deg: mean(rows.iter().map(|r| r.gravity_angle_err_deg)),
        mean_bias_g_err_mag: mean(rows.iter().map(|r| r.bias_g_err_mag)),
        mean_bias_a_err_mag: mean(rows.iter().map(|r| r.bias_a_err_mag)),
        mean_solve_time_us: mean(rows.iter().filter(|r| !r.warmup).map(|r| Some(r.solve_time_us))),
    }
}

pub fn summarize(reports: &[AttemptReport], rows: &[Row]) -> Summary {
    let count = |s: AttemptStatus| reports.iter().filter(|r| r.status == s).count();
    let mut ids: Vec<SolverId> = rows.iter().map(|r| r.solver).collect();
    ids.sort();
    ids.dedup();

    let solvers = ids
        .iter()
        .map(|&id| {
            let mine: Vec<&Row> = rows.iter().filter(|r| r.solver == id).collect();
            let solved: Vec<&Row> = mine.iter().copied().filter(|r| r.solver_status == SolverStatus::Solved).collect();
            let converged: Vec<&Row> = solved.iter().copied().filter(|r| r.converged == Some(true)).collect();
            SolverSummary {
                solver: id,
                solved: solved.len(),
                failed: mine.iter().filter(|r| r.solver_status == SolverStatus::Failed).count(),
                converged: converged.len(),
                all: aggregate(&solved),
                converged_only: aggregate(&converged),
            }
        })
        .collect();

    let speedups = ids
        .iter()
        .filter(|&&id| id != SolverId::Analytic && ids.contains(&SolverId::Analytic))
        .map(|&baseline| {
            let pairs: Vec<(f64, f64)> = reports
                .iter()
                .filter(|a| !a.warmup)
                .filter_map(|a| {
                    let time = |id: SolverId| {
                        a.solvers
                            .iter()
                            .find(|s| s.solver == id && s.status == SolverStatus::Solved)
                            .map(|s| s.solve_time_us)
                    };
                    Some((time(SolverId::Analytic)?, time(baseline)?))
                })
                .collect();
            let n = pairs.len();
            let (sum_a, sum_b) = pairs.iter().fold((0.0, 0.0), |(x, y), (a, b)| (x + a, y + b));
            Speedup {
                baseline,
                attempts: n,
                analytic_faster_fraction: (n > 0).then(|| pairs.iter().filter(|(a, b)| a < b).count() as f64 / n as f64),
                ratio: (sum_a > 0.0).then(|| sum_b / sum_a),
            }
        })
        .collect();

    Summary {
        attempts_total: reports.len(),
        attempts_solved: count(AttemptStatus::Solved),
        attempts_discarded: count(AttemptStatus::Discarded),
        attempts_failed: count(AttemptStatus::Failed),
        solvers,
        speedups,
    }
}

/// JSON document: schema version, config echo, seed, records and summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub seed: u64,
    pub config: RunConfig,
    pub records: Vec<Row>,
    pub summary: Summary,
}

impl Report {
    pub fn new(config: &RunConfig, reports: &[AttemptReport]) -> Self {
        let records = rows(reports, config.seed);
        let summary = summarize(reports, &records);
        Self {
            schema_version: SCHEMA_VERSION,
            seed: config.seed,
            config: config.clone(),
            records,
            summary,
        }
    }
}

pub fn write_csv<W: Write>(out: W, records: &[Row]) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    writer.write_record(COLUMNS)?;
    for r in records {
        writer.serialize(r)?;
    }
    writer.flush().map_err(|e| HarnessError::Csv(e.into()))?;
    Ok(())
}

pub fn write_json<W: Write>(out: W, report: &Report) -> Result<()> {
    serde_json::to_writer_pretty(out, report)?;
    Ok(())
}

/// Writes `report` to `path`, or to stdout when `path` is `None`.
pub fn emit_report(report: &Report, path: Option<&Path>, format: Format) -> Result<()> {
    let mut buffer = Vec::new();
    match format {
        Format::Csv => write_csv(&mut buffer, &report.records)?,
        Format::Json => {
            write_json(&mut buffer, report)?;
            buffer.push(b'\n');
        }
    }
    match path {
        Some(p) => std::fs::write(p, &buffer).map_err(|source| HarnessError::Io { path: p.to_path_buf(), source }),
        None => std::io::stdout()
            .write_all(&buffer)
            .map_err(|source| HarnessError::Io { path: "<stdout>".into(), source }),
    }
}

pub fn read_json(path: impl AsRef<Path>) -> Result<Report> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })?;
    Ok(serde_json::from_str(&text)?)
}
