mod common;

use common::*;
use nalgebra::{Matrix3, Vector3};
use viinit::synth::{SynthConfig, TrajectoryKind};
use viinit::{accel, so3, synth, Window};

#[test]
fn gyro_bias_recovered_exactly_on_noiseless_data() {
    let p = prepare(&SynthConfig::default());
    let err = (p.bias_g - p.out.truth.bias_g).norm();
    assert!(err < 1e-8, "gyro bias error {err:e}");
}

#[test]
fn residuals_vanish_at_truth() {
    let p = prepare(&SynthConfig::default());
    let t = p.out.truth;
    let x = accel::state_vector(t.scale, &t.bias_a, &t.gravity);
    for b in &p.blocks {
        assert!(b.residual(&x).norm() < 1e-8, "{}", b.residual(&x).norm());
    }
}

#[test]
fn residuals_vanish_at_truth_with_lever_arm() {
    let q = so3::quaternion_from_rotation(&so3::exp(&Vector3::new(0.1, -1.5, 0.4)));
    let config = SynthConfig {
        extrinsic_rotation: q,
        extrinsic_translation: [0.05, -0.12, 0.03],
        ..Default::default()
    };
    let p = prepare(&config);
    let t = p.out.truth;
    let x = accel::state_vector(t.scale, &t.bias_a, &t.gravity);
    for b in &p.blocks {
        assert!(b.residual(&x).norm() < 1e-8);
    }
    let sol = viinit::solve_analytic(&p.blocks).unwrap();
    assert_recovers(&sol, &p.out, 1e-6);
}

#[test]
fn analytic_solver_recovers_noiseless_truth() {
    let p = prepare(&SynthConfig::default());
    let sol = viinit::solve_analytic(&p.blocks).unwrap();
    assert_recovers(&sol, &p.out, 1e-6);
    assert!(sol.diagnostics.scale_positive);
    assert!((sol.gravity.norm() - viinit::GRAVITY_MAGNITUDE).abs() < 1e-9);
    assert!(sol.cost >= 0.0 && sol.cost < 1e-6);
}

#[test]
fn noiseless_preintegration_reproduces_relative_states() {
    let out = noiseless(&SynthConfig {
        true_bias_g: [0.0; 3],
        true_bias_a: [0.0; 3],
        ..Default::default()
    });
    let window = Window::from_stream(&out.keyframes, &out.imu_samples).unwrap();
    let zero = Vector3::zeros();
    let deltas = window.preintegrate(&zero, &zero, &viinit::Noise::euroc()).unwrap();
    let g = out.truth.gravity;
    for (k, d) in deltas.iter().enumerate() {
        let (si, sj) = (&out.states[k * 50], &out.states[(k + 1) * 50]);
        let dt = sj.t - si.t;
        let rot = si.rotation.transpose() * sj.rotation;
        let vel = si.rotation.transpose() * (sj.velocity - si.velocity - g * dt);
        let pos = si.rotation.transpose() * (sj.position - si.position - si.velocity * dt - g * (0.5 * dt * dt));
        assert!((d.d_rot - rot).abs().max() < 1e-12);
        assert!((d.d_vel - vel).norm() < 1e-11);
        assert!((d.d_pos - pos).norm() < 1e-11);
    }
}

#[test]
fn integrating_samples_tracks_analytic_positions() {
    let out = noiseless(&SynthConfig {
        true_bias_g: [0.0; 3],
        true_bias_a: [0.0; 3],
        ..Default::default()
    });
    // measured max gap to the analytic trajectory over 5 s at 200 Hz
    println!("euler drift: {:.3e} m", out.euler_drift);
    assert!(out.euler_drift < 5e-3);
}

#[test]
fn constant_velocity_and_stationary_are_unexcited() {
    for kind in [TrajectoryKind::ConstantVelocity, TrajectoryKind::Stationary] {
        let out = noiseless(&SynthConfig { trajectory: kind, ..Default::default() });
        let window = Window::from_stream(&out.keyframes, &out.imu_samples).unwrap();
        let zero = Vector3::zeros();
        let deltas = window.preintegrate(&zero, &zero, &viinit::Noise::euroc()).unwrap();
        assert!(!viinit::check_excitation(&deltas), "{kind:?}");
    }
    let out = noiseless(&SynthConfig::default());
    let window = Window::from_stream(&out.keyframes, &out.imu_samples).unwrap();
    let zero = Vector3::zeros();
    assert!(viinit::check_excitation(&window.preintegrate(&zero, &zero, &viinit::Noise::euroc()).unwrap()));
}

/// The check sees raw magnitudes, so an accelerometer bias along gravity
/// larger than the threshold (0.5 % of G, about 0.049 m/s²) makes a
/// motionless window look excited.
#[test]
fn bias_along_gravity_defeats_the_excitation_check() {
    let base = SynthConfig { trajectory: TrajectoryKind::Stationary, true_bias_a: [0.0; 3], ..Default::default() };
    let probe = noiseless(&base);
    // specific force at rest points against gravity in the body frame
    let up = probe.imu_samples[0].accel.normalize();
    let zero = Vector3::zeros();
    for (magnitude, excited) in [(0.03, false), (0.06, true)] {
        let out = noiseless(&SynthConfig { true_bias_a: (up * magnitude).into(), ..base.clone() });
        let window = Window::from_stream(&out.keyframes, &out.imu_samples).unwrap();
        let deltas = window.preintegrate(&zero, &zero, &viinit::Noise::euroc()).unwrap();
        assert_eq!(viinit::check_excitation(&deltas), excited, "bias {magnitude}");
    }
}

#[test]
fn gravity_frame_equivariance() {
    let p = prepare(&SynthConfig::default());
    let base = viinit::solve_analytic(&p.blocks).unwrap();
    let r0 = so3::exp(&Vector3::new(0.4, -0.9, 2.1));
    let mut out = p.out.clone();
    for kf in &mut out.keyframes {
        kf.rotation = r0 * kf.rotation;
        kf.position = r0 * kf.position;
    }
    let rotated = solve_out(&out);
    assert!((rotated.scale - base.scale).abs() < 1e-9);
    assert!((rotated.bias_a - base.bias_a).norm() < 1e-9);
    assert!((rotated.gravity - r0 * base.gravity).norm() < 1e-9);
}

#[test]
fn scale_equivariance() {
    let p = prepare(&SynthConfig { noise: Some(synth::NoiseDensities::euroc()), seed: 3, ..Default::default() });
    let base = viinit::solve_analytic(&p.blocks).unwrap();
    let c = 3.7;
    let mut out = p.out.clone();
    for kf in &mut out.keyframes {
        kf.position *= c;
    }
    let scaled = solve_out(&out);
    assert!((scaled.scale - base.scale / c).abs() < 1e-9);
    assert!((scaled.bias_a - base.bias_a).norm() < 1e-9);
    assert!((scaled.gravity - base.gravity).norm() < 1e-9);
}

fn solve_out(out: &synth::SynthOutput) -> viinit::Solution {
    let window = Window::from_stream(&out.keyframes, &out.imu_samples).unwrap();
    let noise = viinit::Noise::euroc();
    viinit::initialize(&window, &out.extrinsics, &noise, &Default::default()).unwrap()
}

#[test]
fn gyro_solution_is_invariant_to_world_rotation() {
    let out = noiseless(&SynthConfig { noise: Some(synth::NoiseDensities::euroc()), seed: 5, ..Default::default() });
    let noise = viinit::Noise::euroc();
    let solve = |out: &synth::SynthOutput| {
        let w = Window::from_stream(&out.keyframes, &out.imu_samples).unwrap();
        let zero = Vector3::zeros();
        let d = w.preintegrate(&zero, &zero, &noise).unwrap();
        viinit::pipeline::estimate_gyro_bias(&w, &d, &out.extrinsics, &noise, &Default::default())
            .unwrap()
            .bias_g
    };
    let base = solve(&out);
    let r0: Matrix3<f64> = so3::exp(&Vector3::new(-1.0, 0.3, 0.8));
    let mut moved = out.clone();
    for kf in &mut moved.keyframes {
        kf.rotation = r0 * kf.rotation;
    }
    assert!((solve(&moved) - base).norm() < 1e-10);
}

#[test]
fn single_precision_pipeline_runs() {
    let out = noiseless(&SynthConfig::default());
    let samples: Vec<viinit::Sample32> = out.imu_samples.iter().map(|s| s.cast()).collect();
    let keyframes: Vec<viinit::Pose32> = out
        .keyframes
        .iter()
        .map(|k| viinit::KeyframePose::new(k.t, k.rotation.cast(), k.position.cast()))
        .collect();
    let window = Window::from_stream(&keyframes, &samples).unwrap();
    let ext = viinit::Extrinsics::<f32>::default();
    let sol = viinit::initialize(&window, &ext, &viinit::NoiseSpec::<f32>::euroc(), &Default::default()).unwrap();
    assert!((sol.scale as f64 - 2.3).abs() / 2.3 < 1e-2, "{}", sol.scale);
}

#[test]
fn keyframes_between_imu_ticks_are_handled() {
    // shift every keyframe by 2 ms; samples at 200 Hz no longer line up
    let out = noiseless(&SynthConfig::default());
    let shifted: Vec<viinit::Pose> = out.keyframes.iter().map(|k| viinit::KeyframePose { t: k.t + 0.002, ..*k }).collect();
    let window = Window::from_stream(&shifted, &out.imu_samples).unwrap();
    let zero = Vector3::zeros();
    let deltas = window.preintegrate(&zero, &zero, &viinit::Noise::euroc()).unwrap();
    for (d, kf) in deltas.iter().zip(shifted.windows(2)) {
        assert!((d.dt - (kf[1].t - kf[0].t)).abs() < 1e-12);
    }
    assert_eq!(window.intervals[0].len(), 51);
}
