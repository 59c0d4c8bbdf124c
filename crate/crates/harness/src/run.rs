//! The attempt sweep.

use std::time::Instant;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use viinit::pipeline::estimate_gyro_bias;
use viinit::{accel, reference, IterativeConfig, LmConfig, Solution, Window};
use viinit_euroc::{select_keyframes, slice_imu};

use crate::config::{RunConfig, SolverId};
use crate::data::{load_data, SequenceData};
use crate::error::Result;
use crate::metrics;

/// Attempt windows reach this far before their first keyframe so the IMU
/// sample active at that keyframe is included.
const IMU_LEAD: f64 = 0.05;
/// Slack when checking that a window fits inside the data.
const FIT_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttemptStatus {
    Solved,
    Discarded,
    Failed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverStatus {
    Solved,
    Failed,
    Skipped,
}

/// Wall-clock per stage in microseconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimes {
    pub preintegration_us: f64,
    pub gyro_us: f64,
    pub blocks_us: f64,
    pub total_us: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Errors {
    pub scale_err_pct: Option<f64>,
    pub gravity_angle_err_deg: Option<f64>,
    pub bias_g_err_mag: Option<f64>,
    pub bias_a_err_mag: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverRecord {
    pub solver: SolverId,
    pub status: SolverStatus,
    pub solution: Option<Solution>,
    pub solve_time_us: f64,
    pub errors: Errors,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttemptReport {
    /// Window start, seconds.
    pub t_attempt: f64,
    pub window_len: f64,
    pub num_keyframes: usize,
    /// `None` when the attempt failed before the check ran.
    pub excitation_ok: Option<bool>,
    pub status: AttemptStatus,
    /// First attempt of the sweep; kept out of timing aggregates.
    pub warmup: bool,
    pub times: StageTimes,
    pub bias_g: Option<Vector3<f64>>,
    pub solvers: Vec<SolverRecord>,
    pub error: Option<String>,
}

pub fn run_sequence(config: &RunConfig) -> Result<Vec<AttemptReport>> {
    config.validate()?;
    let data = load_data(config)?;
    Ok(sweep(&data, config))
}

/// Attempt start times and window lengths that fit inside the data, in
/// canonical order.
pub fn schedule(data: &SequenceData, config: &RunConfig) -> Vec<(f64, f64)> {
    let (Some(imu0), Some(imu1), Some(p0), Some(p1)) =
        (data.imu.first(), data.imu.last(), data.poses.first(), data.poses.last())
    else {
        return Vec::new();
    };
    let begin = imu0.t.max(p0.t);
    let end = imu1.t.min(p1.t);
    let mut windows = config.windows.clone();
    windows.sort_by(f64::total_cmp);
    windows.dedup();
    let mut out = Vec::new();
    for k in 0.. {
        let t = begin + k as f64 * config.attempt_interval;
        if t + windows[0] > end + FIT_EPS {
            break;
        }
        out.extend(windows.iter().filter(|&&w| t + w <= end + FIT_EPS).map(|&w| (t, w)));
    }
    out
}

/// Runs every scheduled attempt in order on the calling thread; failures are
/// recorded per attempt.
pub fn sweep(data: &SequenceData, config: &RunConfig) -> Vec<AttemptReport> {
    let mut solvers = config.solvers.clone();
    solvers.sort();
    solvers.dedup();
    schedule(data, config)
        .into_iter()
        .enumerate()
        .map(|(i, (t, w))| {
            let mut report = attempt(data, config, &solvers, t, w);
            report.warmup = i == 0;
            report
        })
        .collect()
}

fn micros(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e6
}

fn skipped(solvers: &[SolverId]) -> Vec<SolverRecord> {
    solvers
        .iter()
        .map(|&solver| SolverRecord {
            solver,
            status: SolverStatus::Skipped,
            solution: None,
            solve_time_us: 0.0,
            errors: Errors::default(),
            error: None,
        })
        .collect()
}

/// Runs one window. Never fails: problems are recorded in the report.
pub fn attempt(data: &SequenceData, config: &RunConfig, solvers: &[SolverId], t: f64, window_len: f64) -> AttemptReport {
    let start = Instant::now();
    let mut report = AttemptReport {
        t_attempt: t,
        window_len,
        num_keyframes: 0,
        excitation_ok: None,
        status: AttemptStatus::Failed,
        warmup: false,
        times: StageTimes::default(),
        bias_g: None,
        solvers: skipped(solvers),
        error: None,
    };
    if let Err(e) = run_attempt(data, config, &mut report) {
        report.status = AttemptStatus::Failed;
        report.error = Some(e);
    }
    report.times.total_us = micros(start);
    report
}

fn run_attempt(data: &SequenceData, config: &RunConfig, report: &mut AttemptReport) -> std::result::Result<(), String> {
    let (t, window_len) = (report.t_attempt, report.window_len);
    let keyframes = select_keyframes(&data.poses, config.keyframe_rate, t, t + window_len).map_err(|e| e.to_string())?;
    report.num_keyframes = keyframes.len();
    let last = keyframes.last().map_or(t, |k| k.t);
    let first = keyframes.first().map_or(t, |k| k.t);
    let samples = slice_imu(&data.imu, first - IMU_LEAD, last).map_err(|e| e.to_string())?;
    let window = Window::from_stream(&keyframes, samples).map_err(|e| e.to_string())?;
    if keyframes.len() < 5 {
        return Err(viinit::Error::Underdetermined { needed: 5, got: keyframes.len() }.to_string());
    }

    let zero = Vector3::zeros();
    let clock = Instant::now();
    let initial = window.preintegrate(&zero, &zero, &data.noise).map_err(|e| e.to_string())?;
    let excited = accel::check_excitation(&initial);
    report.times.preintegration_us = micros(clock);
    report.excitation_ok = Some(excited);
    if !excited {
        report.status = AttemptStatus::Discarded;
        return Ok(());
    }

    let clock = Instant::now();
    let gyro = estimate_gyro_bias(&window, &initial, &data.extrinsics, &data.noise, &LmConfig::default())
        .map_err(|e| e.to_string())?;
    report.times.gyro_us = micros(clock);
    report.bias_g = Some(gyro.bias_g);

    let clock = Instant::now();
    let blocks = accel::build_residual_blocks(&keyframes, &gyro.deltas, &data.extrinsics).map_err(|e| e.to_string())?;
    report.times.blocks_us = micros(clock);

    let truth_biases = data.truth.biases.as_ref().and_then(|b| b.at(t));
    for record in &mut report.solvers {
        let (result, time) = timed_solve(record.solver, &blocks, &config.scales, config.timing_repeats);
        record.solve_time_us = time;
        match result {
            Ok(sol) => {
                record.errors = Errors {
                    scale_err_pct: data.truth.scale.map(|s| metrics::scale_error(sol.scale, s)),
                    gravity_angle_err_deg: data
                        .truth
                        .gravity
                        .and_then(|g| metrics::gravity_angle_error(&sol.gravity, &g).ok()),
                    bias_g_err_mag: truth_biases.map(|(bg, _)| metrics::bias_error(&sol.bias_g, &bg)),
                    bias_a_err_mag: truth_biases.map(|(_, ba)| metrics::bias_error(&sol.bias_a, &ba)),
                };
                record.status = SolverStatus::Solved;
                record.solution = Some(sol);
            }
            Err(e) => {
                record.status = SolverStatus::Failed;
                record.error = Some(e.to_string());
            }
        }
    }
    report.status = if report.solvers.iter().any(|r| r.status == SolverStatus::Solved) {
        AttemptStatus::Solved
    } else {
        AttemptStatus::Failed
    };
    Ok(())
}

/// Fastest of `repeats` runs; the solvers are deterministic, so the first
/// result stands for all of them.
fn timed_solve(solver: SolverId, blocks: &[viinit::Block], scales: &[f64], repeats: usize) -> (viinit::Result<Solution>, f64) {
    let clock = Instant::now();
    let result = solve(solver, blocks, scales);
    let mut best = micros(clock);
    for _ in 1..repeats {
        let clock = Instant::now();
        std::hint::black_box(solve(solver, blocks, scales).ok());
        best = best.min(micros(clock));
    }
    (result, best)
}

fn solve(solver: SolverId, blocks: &[viinit::Block], scales: &[f64]) -> viinit::Result<Solution> {
    match solver {
        SolverId::Analytic => viinit::solve_analytic(blocks),
        SolverId::Iterative => {
            let config = IterativeConfig { initial_scale: scales[0], ..Default::default() };
            reference::solve_iterative(blocks, &config)
        }
        SolverId::Multistart => reference::solve_multi_start(blocks, scales, &IterativeConfig::default()),
    }
}
