#![allow(dead_code)]

use nalgebra::Vector3;
use viinit::synth::{self, NoiseDensities, SynthConfig, SynthOutput};
use viinit::{Block, Noise, Solution, Window};

pub struct Prepared {
    pub out: SynthOutput,
    pub blocks: Vec<Block>,
    pub bias_g: Vector3<f64>,
}

pub fn noiseless(config: &SynthConfig) -> SynthOutput {
    synth::generate(config).unwrap()
}

/// Runs the gyro stage and builds the accelerometer blocks.
pub fn prepare(config: &SynthConfig) -> Prepared {
    let out = synth::generate(config).unwrap();
    let noise = weighting(config);
    let window = Window::from_stream(&out.keyframes, &out.imu_samples).unwrap();
    let p = viinit::pipeline::prepare(&window, &out.extrinsics, &noise, &Default::default()).unwrap();
    Prepared {
        bias_g: p.gyro.bias_g,
        blocks: p.blocks,
        out,
    }
}

pub fn weighting(config: &SynthConfig) -> Noise {
    config.noise.unwrap_or(NoiseDensities::euroc()).spec()
}

pub fn gravity_angle(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    (a.dot(b) / (a.norm() * b.norm())).clamp(-1.0, 1.0).acos()
}

pub fn noisy(seed: u64, duration: f64) -> SynthConfig {
    SynthConfig {
        duration,
        noise: Some(NoiseDensities::euroc()),
        seed,
        ..Default::default()
    }
}

pub fn assert_recovers(sol: &Solution, out: &SynthOutput, tol: f64) {
    let t = &out.truth;
    assert!((sol.scale - t.scale).abs() / t.scale < tol, "scale {} vs {}", sol.scale, t.scale);
    assert!(gravity_angle(&sol.gravity, &t.gravity) < tol, "gravity {}", sol.gravity);
    assert!((sol.bias_a - t.bias_a).norm() < tol, "bias_a {}", sol.bias_a);
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec3(rng: &mut ChaCha8Rng, r: f64) -> Vector3<f64> {
    if r == 0.0 {
        return Vector3::zeros();
    }
    Vector3::new(rng.random_range(-r..r), rng.random_range(-r..r), rng.random_range(-r..r))
}

/// Random blocks shaped like real ones (`B = -c·I`, SPD covariance) whose
/// residuals at a random feasible state are of size `noise`.
pub fn random_blocks(rng: &mut ChaCha8Rng, count: usize, noise: f64) -> (Vec<Block>, nalgebra::SVector<f64, 7>) {
    let gravity = random_vec3(rng, 1.0).normalize() * viinit::GRAVITY_MAGNITUDE;
    let scale = rng.random_range(0.5..5.0);
    let x = viinit::accel::state_vector(scale, &random_vec3(rng, 0.1), &gravity);
    let blocks = (0..count)
        .map(|_| {
            let l = nalgebra::Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0)) * 0.01;
            let sigma = l * l.transpose() + nalgebra::Matrix3::identity() * 1e-4;
            let mut block = Block {
                alpha: random_vec3(rng, 2.0),
                a: nalgebra::Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0)),
                b: nalgebra::Matrix3::identity() * -rng.random_range(0.1..0.5),
                pi: Vector3::zeros(),
                sigma,
                bias_g: Vector3::zeros(),
            };
            block.pi = block.design() * x + random_vec3(rng, noise);
            block
        })
        .collect();
    (blocks, x)
}
