use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser};
use viinit_harness::config::{load_synth_config, parse_list, DataSource, Format, PoseSource, RunConfig, SolverId};
use viinit_harness::report::{emit_report, Report};
use viinit_harness::{run_sequence, HarnessError, Result};

/// Sweep visual-inertial initialization over sliding windows of a sequence.
///
/// Exit status: 0 after a completed sweep, 2 for configuration errors, 1 for
/// data errors.
#[derive(Parser, Debug)]
#[command(name = "viinit", version)]
#[command(group(ArgGroup::new("source").required(true).args(["data", "synth"])))]
struct Cli {
    /// EuRoC sequence directory (containing mav0/ or imu0/ directly).
    #[arg(long, value_name = "DIR")]
    data: Option<PathBuf>,

    /// TOML description of a synthetic sequence.
    #[arg(long, value_name = "FILE")]
    synth: Option<PathBuf>,

    /// Pose source: `groundtruth` or `file:PATH` (TUM format).
    #[arg(long, default_value = "groundtruth")]
    poses: String,

    /// Ground-truth positions are divided by this factor, which becomes the
    /// scale to recover. EuRoC only.
    #[arg(long, default_value_t = 1.0)]
    gt_scale: f64,

    /// Calibration file (`key = value`) for EuRoC data.
    #[arg(long, value_name = "FILE")]
    calib: Option<PathBuf>,

    /// Keyframe rate in Hz.
    #[arg(long, default_value_t = 4.0)]
    keyframe_rate: f64,

    /// Seconds between attempt start times.
    #[arg(long, default_value_t = 0.5)]
    attempt_interval: f64,

    /// Comma-separated window lengths in seconds.
    #[arg(long, default_value = "1,2,5,10")]
    windows: String,

    /// Comma-separated subset of analytic, iterative, multistart.
    #[arg(long, default_value = "analytic,iterative,multistart")]
    solvers: String,

    /// Comma-separated initial scales for the multi-start solver.
    #[arg(long, default_value = "1,4,16")]
    scales: String,

    /// RNG seed; defaults to the synthetic config's seed, else 0.
    #[arg(long)]
    seed: Option<u64>,

    /// Runs per solver per attempt; the fastest is reported.
    #[arg(long, default_value_t = 3)]
    timing_repeats: usize,

    /// Output file; standard output when omitted.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "csv")]
    format: CliFormat,

    /// Write the synthetic sequence as a EuRoC-style directory and exit.
    #[arg(long, value_name = "DIR", requires = "synth")]
    export_synth: Option<PathBuf>,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum CliFormat {
    Csv,
    Json,
}

fn build_config(cli: &Cli) -> Result<RunConfig> {
    let (data, synth_seed) = match (&cli.data, &cli.synth) {
        (Some(dir), None) => (DataSource::Euroc { dir: dir.clone(), calib: cli.calib.clone() }, None),
        (None, Some(path)) => {
            let synth = load_synth_config(path)?;
            let seed = synth.seed;
            (DataSource::Synth(synth), Some(seed))
        }
        _ => return Err(HarnessError::Config("exactly one of --data and --synth is required".into())),
    };
    let mut config = RunConfig::new(data);
    config.poses = PoseSource::parse(&cli.poses, cli.gt_scale)?;
    config.keyframe_rate = cli.keyframe_rate;
    config.attempt_interval = cli.attempt_interval;
    config.windows = parse_list(&cli.windows)?;
    config.solvers = cli.solvers.split(',').map(SolverId::parse).collect::<Result<_>>()?;
    config.scales = parse_list(&cli.scales)?;
    config.seed = cli.seed.or(synth_seed).unwrap_or(0);
    config.timing_repeats = cli.timing_repeats;
    config.out = cli.out.clone();
    config.format = match cli.format {
        CliFormat::Csv => Format::Csv,
        CliFormat::Json => Format::Json,
    };
    config.validate()?;
    Ok(config)
}

fn export(config: &RunConfig, dir: &PathBuf) -> Result<()> {
    let DataSource::Synth(synth) = &config.data else {
        return Err(HarnessError::Config("--export-synth needs --synth".into()));
    };
    let synth = viinit::synth::SynthConfig { seed: config.seed, ..synth.clone() };
    let out = viinit::synth::generate(&synth).map_err(|e| HarnessError::Config(e.to_string()))?;
    viinit_euroc::export_synth(&out, synth.noise, dir, 1_000_000_000)?;
    eprintln!("wrote {}", dir.display());
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let config = build_config(cli)?;
    if let Some(dir) = &cli.export_synth {
        return export(&config, dir);
    }
    let reports = run_sequence(&config)?;
    let report = Report::new(&config, &reports);
    emit_report(&report, config.out.as_deref(), config.format)?;

    let s = &report.summary;
    eprintln!(
        "attempts: {} total, {} solved, {} discarded, {} failed",
        s.attempts_total, s.attempts_solved, s.attempts_discarded, s.attempts_failed
    );
    for solver in &s.solvers {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
        eprintln!(
            "{:?}: solved {} failed {} | scale err {}% | gravity err {} deg | mean solve {} us",
            solver.solver,
            solver.solved,
            solver.failed,
            fmt(solver.all.mean_scale_err_pct),
            fmt(solver.all.mean_gravity_angle_err_deg),
            fmt(solver.all.mean_solve_time_us),
        );
    }
    for speedup in &s.speedups {
        if let (Some(ratio), Some(frac)) = (speedup.ratio, speedup.analytic_faster_fraction) {
            eprintln!(
                "analytic vs {:?}: {ratio:.2}x faster overall, faster on {:.1}% of {} attempts",
                speedup.baseline,
                100.0 * frac,
                speedup.attempts
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}
