use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not a rotation (orthonormality error {0:e})")]
    InvalidRotation(f64),
    #[error("no IMU samples to integrate")]
    EmptySamples,
    #[error("timestamps are not strictly increasing at sample {index}")]
    NonMonotonicTimestamps { index: usize },
    #[error("integration end {end} does not follow the last sample at {last}")]
    BadIntervalEnd { last: f64, end: f64 },
    #[error("noise covariance is not symmetric positive definite")]
    InvalidNoise,
    #[error("need at least {needed} items, got {got}")]
    Underdetermined { needed: usize, got: usize },
    #[error("normal equations are singular at every damping level")]
    SingularProblem,
    #[error("ill-conditioned bias/scale block (condition number {0:e}); insufficient excitation")]
    Degenerate(f64),
    #[error("no real root of the multiplier polynomial yields a feasible solution")]
    NoSolution,
    #[error("none of the {0} iterative runs converged")]
    NonConvergence(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
