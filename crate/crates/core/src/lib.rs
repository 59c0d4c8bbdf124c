//! Visual-inertial initialization.
//!
//! Given up-to-scale keyframe poses from a monocular vision system and the IMU
//! stream between them, estimate the gyroscope bias iteratively and then the
//! metric scale, accelerometer bias and gravity vector in closed form.
//!
//! The math is generic over [`Real`] (`f32` or `f64`); the aliases below fix
//! the scalar for the common cases.

pub mod accel;
pub mod error;
pub mod gyro;
pub mod keyframe;
pub mod pipeline;
pub mod preintegration;
pub mod reference;
pub mod roots;
pub mod scalar;
pub mod so3;
pub mod synth;

pub use accel::{
    assemble_quadratic, build_lambda_polynomial, build_residual_block, build_residual_blocks, check_excitation,
    solve_analytic, solve_constrained, total_cost, AccelTriplet, InitSolution, LambdaPolynomial, QuadraticSystem,
    ResidualBlock, WhitenedBlocks, GRAVITY_MAGNITUDE,
};
pub use error::{Error, Result};
pub use gyro::{solve_gyro_bias, GyroPair, GyroProblem, GyroSolution, LmConfig};
pub use keyframe::{Extrinsics, KeyframePose};
pub use pipeline::{initialize, Window};
pub use preintegration::{preintegrate, preintegrate_between, ImuSample, NoiseSpec, PreintegratedDelta};
pub use reference::{solve_iterative, solve_multi_start, IterativeConfig};
pub use scalar::Real;

pub type Sample = ImuSample<f64>;
pub type Delta = PreintegratedDelta<f64>;
pub type Noise = NoiseSpec<f64>;
pub type Pose = KeyframePose<f64>;
pub type Block = ResidualBlock<f64>;
pub type System = QuadraticSystem<f64>;
pub type Solution = InitSolution<f64>;

pub type Sample32 = ImuSample<f32>;
pub type Delta32 = PreintegratedDelta<f32>;
pub type Pose32 = KeyframePose<f32>;
pub type Solution32 = InitSolution<f32>;
