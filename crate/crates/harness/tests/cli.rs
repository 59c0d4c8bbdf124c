use std::path::Path;
use std::process::{Command, Output};

use viinit_harness::report::{read_json, COLUMNS};

fn viinit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_viinit")).args(args).output().unwrap()
}

fn write_synth(dir: &Path, body: &str) -> String {
    let path = dir.join("synth.toml");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn synthetic_sweep_to_csv() {
    let dir = tempfile::tempdir().unwrap();
    let synth = write_synth(dir.path(), "duration = 4.0\nseed = 3\nnoise = { gyro = 1.6968e-4, accel = 2.0e-3 }\n");
    let out = dir.path().join("out.csv");
    let result = viinit(&["--synth", &synth, "--windows", "1,2", "--out", out.to_str().unwrap()]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), COLUMNS.join(","));
    assert!(text.lines().count() > 10);
    assert!(String::from_utf8_lossy(&result.stderr).contains("attempts:"));
}

#[test]
fn csv_goes_to_stdout_without_out() {
    let dir = tempfile::tempdir().unwrap();
    let synth = write_synth(dir.path(), "duration = 2.0\n");
    let result = viinit(&["--synth", &synth, "--windows", "1", "--solvers", "analytic"]);
    assert!(result.status.success());
    let stdout = String::from_utf8(result.stdout).unwrap();
    assert!(stdout.starts_with("schema_version,"));
    assert!(stdout.lines().skip(1).all(|l| l.contains(",analytic,")));
}

#[test]
fn json_output_and_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let synth = write_synth(dir.path(), "duration = 3.0\nseed = 3\n");
    let out = dir.path().join("out.json");
    let result = viinit(&["--synth", &synth, "--windows", "2", "--seed", "17", "--format", "json", "--out", out.to_str().unwrap()]);
    assert!(result.status.success());
    let report = read_json(&out).unwrap();
    assert_eq!(report.seed, 17);
    assert_eq!(report.config.windows, vec![2.0]);
    assert!(!report.records.is_empty());
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let synth = write_synth(dir.path(), "duration = 3.0\n");
    for args in [
        vec!["--synth", synth.as_str(), "--windows", "0"],
        vec!["--synth", synth.as_str(), "--solvers", "newton"],
        vec!["--synth", synth.as_str(), "--keyframe-rate", "-4"],
        vec!["--synth", synth.as_str(), "--poses", "vicon"],
        vec!["--synth", "/nonexistent/synth.toml"],
        vec!["--synth", synth.as_str(), "--data", "/tmp"],
        vec!["--windows", "1"],
    ] {
        let result = viinit(&args);
        assert_eq!(result.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&result.stderr));
    }
    let bad = write_synth(dir.path(), "duration = 3.0\nunknown_key = 1\n");
    assert_eq!(viinit(&["--synth", &bad]).status.code(), Some(2));
}

#[test]
fn data_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let result = viinit(&["--data", dir.path().to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(1), "{}", String::from_utf8_lossy(&result.stderr));

    let imu = dir.path().join("mav0/imu0");
    std::fs::create_dir_all(&imu).unwrap();
    std::fs::write(imu.join("data.csv"), "#timestamp [ns],w_RS_S_x [rad s^-1]\n1,2\n").unwrap();
    let result = viinit(&["--data", dir.path().to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(1));
}

#[test]
fn exported_sequence_round_trips_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let synth = write_synth(dir.path(), "duration = 6.0\nseed = 4\n");
    let seq = dir.path().join("seq");
    let result = viinit(&["--synth", &synth, "--export-synth", seq.to_str().unwrap()]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    assert!(seq.join("mav0/imu0/data.csv").is_file());
    assert!(seq.join("mav0/state_groundtruth_estimate0/data.csv").is_file());

    let out = dir.path().join("out.json");
    let result = viinit(&[
        "--data",
        seq.to_str().unwrap(),
        "--calib",
        seq.join("calib.txt").to_str().unwrap(),
        "--gt-scale",
        "2.5",
        "--windows",
        "2",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let report = read_json(&out).unwrap();
    assert!(!report.records.is_empty());
    for r in &report.records {
        assert!((r.scale.unwrap() - 2.5).abs() < 1e-4, "{r:?}");
        assert!(r.scale_err_pct.unwrap() < 1e-2);
    }

    let poses = format!("file:{}", seq.join("poses.txt").display());
    let result = viinit(&["--data", seq.to_str().unwrap(), "--calib", seq.join("calib.txt").to_str().unwrap(), "--poses", &poses, "--windows", "2"]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
}
