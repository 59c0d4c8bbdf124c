//! Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion and exits
//! nonzero if any check fails.
//!
//! The EuRoC check runs only when `EUROC_SEQUENCE_DIR` names a sequence
//! directory; `EUROC_CALIB` optionally points at a calibration file for it.

use std::error::Error;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use viinit::synth::{self, NoiseDensities, SynthConfig, TrajectoryKind};
use viinit::{
    assemble_quadratic, build_lambda_polynomial, preintegrate, roots, so3, solve_analytic, solve_iterative,
    solve_multi_start, Block, Delta, GyroPair, IterativeConfig, LmConfig, Noise, Sample, System, Window,
};
use viinit_harness::config::{DataSource, PoseSource, RunConfig, SolverId};
use viinit_harness::metrics::{bias_error, gravity_angle_error, scale_error};
use viinit_harness::run::{AttemptReport, AttemptStatus, SolverStatus};
use viinit_harness::{run_sequence, Report};

type Checked = Result<Outcome, Box<dyn Error>>;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

const MULTISTART_SCALES: [f64; 3] = [1.0, 4.0, 16.0];

fn main() -> ExitCode {
    let checks: [(&str, fn() -> Checked); 8] = [
        ("noiseless recovery", noiseless_recovery),
        ("multiplier polynomial", polynomial_oracle),
        ("global optimality", optimality),
        ("solver timing", timing),
        ("excitation check", excitation),
        ("bias jacobians", jacobians),
        ("accel bias vs window length", window_length_trend),
        ("euroc smoke test", euroc_smoke),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let outcome = check().unwrap_or_else(|e| Outcome::Fail(format!("error: {e}")));
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("{tag} [{}] {name}: {detail} ({secs:.2} s)", i + 1);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn weighting() -> Noise {
    NoiseDensities::euroc().spec()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn random_vec(rng: &mut ChaCha8Rng, r: f64) -> Vector3<f64> {
    Vector3::new(rng.random_range(-r..r), rng.random_range(-r..r), rng.random_range(-r..r))
}

/// 20 keyframes at 4 Hz, no noise, the default truth.
fn noiseless_recovery() -> Checked {
    let start = Instant::now();
    let config = SynthConfig { duration: 4.75, ..Default::default() };
    let out = synth::generate(&config)?;
    let window = Window::from_stream(&out.keyframes, &out.imu_samples)?;
    let sol = viinit::initialize(&window, &out.extrinsics, &weighting(), &LmConfig::default())?;
    let secs = start.elapsed().as_secs_f64();

    let t = &out.truth;
    let scale = scale_error(sol.scale, t.scale);
    let gravity = gravity_angle_error(&sol.gravity, &t.gravity)?;
    let bg = bias_error(&sol.bias_g, &t.bias_g);
    let ba = bias_error(&sol.bias_a, &t.bias_a);
    let ok = out.keyframes.len() == 20 && scale <= 1e-4 && gravity <= 1e-4 && bg <= 1e-6 && ba <= 1e-6 && secs < 1.0;
    Ok(verdict(
        ok,
        format!(
            "{} keyframes, scale {scale:.1e} %, gravity {gravity:.1e} deg, bg {bg:.1e}, ba {ba:.1e}, {:.1} ms",
            out.keyframes.len(),
            secs * 1e3
        ),
    ))
}

/// Random blocks with general (not only diagonal) gravity coupling.
fn random_system(rng: &mut ChaCha8Rng) -> Result<System, viinit::Error> {
    let count = rng.random_range(3..24);
    let gravity = random_vec(rng, 1.0).normalize() * viinit::GRAVITY_MAGNITUDE;
    let x = viinit::accel::state_vector(rng.random_range(0.5..5.0), &random_vec(rng, 0.1), &gravity);
    let blocks: Vec<Block> = (0..count)
        .map(|_| {
            let l = Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0)) * 0.01;
            let mut block = Block {
                alpha: random_vec(rng, 2.0),
                a: Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0)),
                b: Matrix3::from_fn(|_, _| rng.random_range(-0.5..0.5)),
                pi: Vector3::zeros(),
                sigma: l * l.transpose() + Matrix3::identity() * 1e-4,
                bias_g: Vector3::zeros(),
            };
            block.pi = block.design() * x + random_vec(rng, 0.05);
            block
        })
        .collect();
    assemble_quadratic(&blocks)
}

/// Every real root against `mᵀK⁻¹WK⁻ᵀm = G²` by explicit 7×7 inversion.
fn polynomial_oracle() -> Checked {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let w = System::constraint_matrix();
    let (mut worst_root, mut worst_lead, mut roots_seen, mut bad_degree) = (0.0f64, 0.0f64, 0, 0);
    for _ in 0..100 {
        let sys = random_system(&mut rng)?;
        let g2 = sys.gravity_magnitude.powi(2);
        let poly = build_lambda_polynomial(&sys)?;
        if poly.degree() != 6 {
            bad_degree += 1;
        }
        worst_lead = worst_lead.max((poly.coeffs[6] + 64.0 * g2).abs() / (64.0 * g2));
        for lambda in roots::real_roots(&poly.coeffs) {
            let k_inv = sys.lagrangian_matrix(lambda).try_inverse().ok_or("singular K at a root")?;
            let m = &sys.linear;
            let norm_sq = m.dot(&(k_inv * w * k_inv.transpose() * m));
            worst_root = worst_root.max((norm_sq - g2).abs() / g2);
            roots_seen += 1;
        }
    }
    let ok = bad_degree == 0 && worst_lead < 1e-12 && worst_root <= 1e-6 && roots_seen > 0;
    Ok(verdict(
        ok,
        format!(
            "{roots_seen} real roots, worst constraint error {worst_root:.1e}, \
             {bad_degree} wrong degrees, leading coefficient error {worst_lead:.1e}"
        ),
    ))
}

/// Gyro stage plus accelerometer blocks for one noisy synthetic window.
fn noisy_blocks(seed: u64, duration: f64) -> Result<Vec<Block>, viinit::Error> {
    let config = SynthConfig { duration, noise: Some(NoiseDensities::euroc()), seed, ..Default::default() };
    let out = synth::generate(&config)?;
    let window = Window::from_stream(&out.keyframes, &out.imu_samples)?;
    Ok(viinit::pipeline::prepare(&window, &out.extrinsics, &weighting(), &LmConfig::default())?.blocks)
}

fn optimality() -> Checked {
    let (mut worst_gap, mut worst_move) = (f64::NEG_INFINITY, 0.0f64);
    let (mut compared, mut fixed_points) = (0, 0);
    for seed in 0..100 {
        let blocks = noisy_blocks(seed, 4.75)?;
        let analytic = solve_analytic(&blocks)?;
        if let Ok(multi) = solve_multi_start(&blocks, &MULTISTART_SCALES, &IterativeConfig::default()) {
            worst_gap = worst_gap.max(analytic.cost - multi.cost);
            compared += 1;
        }
        if analytic.scale > 0.0 {
            let config = IterativeConfig {
                initial_scale: analytic.scale,
                initial_bias_a: analytic.bias_a,
                gravity_init: Some(analytic.gravity),
                ..Default::default()
            };
            let refined = solve_iterative(&blocks, &config)?;
            worst_move = worst_move.max((refined.state() - analytic.state()).norm());
            fixed_points += 1;
        }
    }
    let ok = compared == 100 && fixed_points == 100 && worst_gap <= 1e-9 && worst_move < 1e-8;
    Ok(verdict(
        ok,
        format!(
            "{compared}/100 compared, worst cost excess over multi-start {worst_gap:.1e}; \
             {fixed_points}/100 refined, worst move {worst_move:.1e}"
        ),
    ))
}

fn synth_run(kind: TrajectoryKind, duration: f64, seed: u64) -> RunConfig {
    let synth = SynthConfig { duration, trajectory: kind, noise: Some(NoiseDensities::euroc()), seed, ..Default::default() };
    let mut config = RunConfig::new(DataSource::Synth(synth));
    config.seed = seed;
    config
}

/// Windows of 5 s hold 21 keyframes at 4 Hz.
fn timing() -> Checked {
    let mut config = synth_run(TrajectoryKind::Sinusoidal, 60.0, 7);
    config.windows = vec![5.0];
    let reports = run_sequence(&config)?;
    let summary = Report::new(&config, &reports).summary;
    let speedup = |id| summary.speedups.iter().find(|s| s.baseline == id);
    let multi = speedup(SolverId::Multistart).ok_or("no multi-start timings")?;
    let (Some(fraction), Some(ratio)) = (multi.analytic_faster_fraction, multi.ratio) else {
        return Ok(Outcome::Fail("no attempt solved by both solvers".into()));
    };
    let iterative = speedup(SolverId::Iterative).and_then(|s| s.ratio).map_or("-".into(), |r| format!("{r:.2}x"));
    Ok(verdict(
        fraction >= 0.95,
        format!(
            "analytic faster on {:.1}% of {} attempts, {ratio:.2}x faster than multi-start \
             (3x expected: {}), {iterative} faster than single-start",
            100.0 * fraction,
            multi.attempts,
            if ratio >= 3.0 { "met" } else { "not met" }
        ),
    ))
}

fn excitation() -> Checked {
    let mut parts = Vec::new();
    let mut ok = true;
    for (kind, want_discarded) in [
        (TrajectoryKind::Stationary, true),
        (TrajectoryKind::ConstantVelocity, true),
        (TrajectoryKind::Sinusoidal, false),
    ] {
        let (mut total, mut discarded) = (0, 0);
        for seed in 0..3 {
            let reports = run_sequence(&synth_run(kind, 12.0, seed))?;
            total += reports.len();
            discarded += reports.iter().filter(|r| r.status == AttemptStatus::Discarded).count();
        }
        ok &= total > 0 && if want_discarded { discarded == total } else { discarded == 0 };
        parts.push(format!("{kind:?} {discarded}/{total} discarded"));
    }
    Ok(verdict(ok, parts.join(", ")))
}

fn random_stream(rng: &mut ChaCha8Rng) -> (Vec<Sample>, f64) {
    let n = rng.random_range(10..120);
    let dt = 0.005;
    let samples = (0..n)
        .map(|k| Sample::new(k as f64 * dt, random_vec(rng, 1.5), random_vec(rng, 4.0) + Vector3::new(0.0, 0.0, 9.81)))
        .collect();
    (samples, n as f64 * dt)
}

const FD_STEP: f64 = 1e-6;

fn central(f: impl Fn(&Vector3<f64>) -> Vector3<f64>, x: &Vector3<f64>) -> Matrix3<f64> {
    let mut jac = Matrix3::zeros();
    for i in 0..3 {
        let mut e = Vector3::zeros();
        e[i] = FD_STEP;
        jac.set_column(i, &((f(&(x + e)) - f(&(x - e))) / (2.0 * FD_STEP)));
    }
    jac
}

fn relative(analytic: &Matrix3<f64>, numeric: &Matrix3<f64>) -> f64 {
    (analytic - numeric).norm() / numeric.norm().max(1e-12)
}

/// Preintegration bias Jacobians and the gyro residual Jacobian against
/// central differences of full re-integration.
fn jacobians() -> Checked {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let noise = weighting();
    let integrate = |s: &[Sample], t: f64, bg: &Vector3<f64>, ba: &Vector3<f64>| -> Delta {
        preintegrate(s, t, bg, ba, &noise).expect("valid stream")
    };
    let mut worst = [0.0f64; 6];
    for _ in 0..50 {
        let (s, t) = random_stream(&mut rng);
        let bg = random_vec(&mut rng, 0.1);
        let ba = random_vec(&mut rng, 0.3);
        let d = integrate(&s, t, &bg, &ba);
        let errs = [
            relative(&d.j_rot_bg, &central(|b| so3::log_unchecked(&(d.d_rot.transpose() * integrate(&s, t, b, &ba).d_rot)), &bg)),
            relative(&d.j_vel_bg, &central(|b| integrate(&s, t, b, &ba).d_vel, &bg)),
            relative(&d.j_vel_ba, &central(|b| integrate(&s, t, &bg, b).d_vel, &ba)),
            relative(&d.j_pos_bg, &central(|b| integrate(&s, t, b, &ba).d_pos, &bg)),
            relative(&d.j_pos_ba, &central(|b| integrate(&s, t, &bg, b).d_pos, &ba)),
        ];

        let lin = random_vec(&mut rng, 0.05);
        let delta = integrate(&s, t, &lin, &Vector3::zeros());
        let rot_i = so3::exp(&random_vec(&mut rng, 2.0));
        let rot_j = rot_i * delta.d_rot * so3::exp(&random_vec(&mut rng, 0.3));
        let pair = GyroPair { delta, rot_i, rot_j };
        let bias = lin + random_vec(&mut rng, 0.05);
        let gyro = relative(&pair.residual_jacobian(&bias), &central(|b| pair.residual(b), &bias));

        for (w, e) in worst.iter_mut().zip(errs.into_iter().chain([gyro])) {
            *w = w.max(e);
        }
    }
    let max = worst.iter().copied().fold(0.0, f64::max);
    Ok(verdict(
        max <= 1e-5,
        format!(
            "worst relative error rot/bg {:.1e}, vel/bg {:.1e}, vel/ba {:.1e}, pos/bg {:.1e}, pos/ba {:.1e}, gyro residual {:.1e}",
            worst[0], worst[1], worst[2], worst[3], worst[4], worst[5]
        ),
    ))
}

fn analytic_bias_a_error(report: &AttemptReport) -> Option<f64> {
    report
        .solvers
        .iter()
        .find(|r| r.solver == SolverId::Analytic && r.status == SolverStatus::Solved)
        .and_then(|r| r.errors.bias_a_err_mag)
}

/// Both windows start at the same instant of each seed's sequence.
fn window_length_trend() -> Checked {
    let (mut short, mut long) = (Vec::new(), Vec::new());
    for seed in 0..50 {
        let mut config = synth_run(TrajectoryKind::Sinusoidal, 10.5, seed);
        config.windows = vec![2.0, 10.0];
        config.attempt_interval = 100.0;
        config.solvers = vec![SolverId::Analytic];
        config.timing_repeats = 1;
        for report in run_sequence(&config)? {
            let err = analytic_bias_a_error(&report).ok_or("window not solved")?;
            if report.window_len < 5.0 {
                short.push(err);
            } else {
                long.push(err);
            }
        }
    }
    if short.len() != 50 || long.len() != 50 {
        return Ok(Outcome::Fail(format!("{} short and {} long windows solved", short.len(), long.len())));
    }
    let (short, long) = (median(short), median(long));
    Ok(verdict(long < short, format!("median accel bias error 2 s {short:.2e}, 10 s {long:.2e}")))
}

const EUROC_SCALE: f64 = 3.0;

fn euroc_smoke() -> Checked {
    let Some(dir) = std::env::var_os("EUROC_SEQUENCE_DIR") else {
        return Ok(Outcome::Skip("EUROC_SEQUENCE_DIR not set".into()));
    };
    let start = Instant::now();
    let calib = std::env::var_os("EUROC_CALIB").map(PathBuf::from);
    let mut config = RunConfig::new(DataSource::Euroc { dir: PathBuf::from(dir), calib });
    config.poses = PoseSource::Groundtruth { scale: EUROC_SCALE };
    let reports = run_sequence(&config)?;
    let secs = start.elapsed().as_secs_f64();

    let excited: Vec<&AttemptReport> = reports.iter().filter(|r| r.excitation_ok == Some(true)).collect();
    let recovered = excited
        .iter()
        .filter(|r| {
            r.solvers
                .iter()
                .any(|s| s.solver == SolverId::Analytic && s.errors.scale_err_pct.is_some_and(|e| e < 5.0))
        })
        .count();
    let fraction = recovered as f64 / excited.len().max(1) as f64;
    Ok(verdict(
        !excited.is_empty() && fraction >= 0.8 && secs < 60.0,
        format!(
            "{recovered}/{} excited attempts within 5% of scale {EUROC_SCALE} ({:.1}%), {} attempts in total",
            excited.len(),
            100.0 * fraction,
            reports.len()
        ),
    ))
}
