//! Gyroscope bias estimation from preintegrated rotations and visual keyframe
//! orientations, solved with Levenberg–Marquardt from a zero bias.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::preintegration::PreintegratedDelta;
use crate::scalar::Real;
use crate::so3;

/// One pair of consecutive keyframes with the preintegrated rotation between them.
#[derive(Clone, Debug)]
pub struct GyroPair<T: Real> {
    pub delta: PreintegratedDelta<T>,
    /// Body orientation (body-to-world) at the first keyframe.
    pub rot_i: Matrix3<T>,
    /// Body orientation at the second keyframe.
    pub rot_j: Matrix3<T>,
}

impl<T: Real> GyroPair<T> {
    /// `Log((ΔR·Exp(J·δbᵍ))ᵀ·R_iᵀ·R_j)` with `δbᵍ` measured from the delta's linearization point.
    pub fn residual(&self, bias_g: &Vector3<T>) -> Vector3<T> {
        so3::log_unchecked(&self.corrected_error(bias_g))
    }

    /// Analytic Jacobian of [`GyroPair::residual`] with respect to the bias.
    pub fn residual_jacobian(&self, bias_g: &Vector3<T>) -> Matrix3<T> {
        let phi = self.delta.j_rot_bg * (bias_g - self.delta.bias_g);
        let err = self.corrected_error(bias_g);
        let r = so3::log_unchecked(&err);
        -so3::right_jacobian_inverse(&r) * err.transpose() * so3::right_jacobian(&phi) * self.delta.j_rot_bg
    }

    fn corrected_error(&self, bias_g: &Vector3<T>) -> Matrix3<T> {
        let phi = self.delta.j_rot_bg * (bias_g - self.delta.bias_g);
        let corrected = self.delta.d_rot * so3::exp(&phi);
        corrected.transpose() * self.rot_i.transpose() * self.rot_j
    }
}

/// Weighted rotation residuals over a run of keyframes.
#[derive(Clone, Debug)]
pub struct GyroProblem<T: Real> {
    pairs: Vec<GyroPair<T>>,
    information: Vec<Matrix3<T>>,
}

impl<T: Real> GyroProblem<T> {
    /// Builds the problem, weighting each pair by the inverse of its rotation covariance.
    pub fn new(pairs: Vec<GyroPair<T>>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Underdetermined { needed: 1, got: 0 });
        }
        let information = pairs
            .iter()
            .map(|p| {
                let cov = p.delta.cov_rot();
                let eig = cov.symmetric_eigen().eigenvalues;
                let (lo, hi) = (eig.min(), eig.max());
                if !(lo > T::zero()) || hi / lo > T::lit(1e12) {
                    return Err(Error::InvalidNoise);
                }
                cov.cholesky().map(|c| c.inverse()).ok_or(Error::InvalidNoise)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { pairs, information })
    }

    pub fn pairs(&self) -> &[GyroPair<T>] {
        &self.pairs
    }

    /// `Σₖ rₖᵀ Σₖ⁻¹ rₖ`
    pub fn cost(&self, bias_g: &Vector3<T>) -> T {
        self.pairs
            .iter()
            .zip(&self.information)
            .fold(T::zero(), |acc, (p, info)| {
                let r = p.residual(bias_g);
                acc + r.dot(&(info * r))
            })
    }

    fn normal_equations(&self, bias_g: &Vector3<T>) -> (Matrix3<T>, Vector3<T>) {
        let mut h = Matrix3::zeros();
        let mut g = Vector3::zeros();
        for (p, info) in self.pairs.iter().zip(&self.information) {
            let r = p.residual(bias_g);
            let j = p.residual_jacobian(bias_g);
            let jt_info = j.transpose() * info;
            h += jt_info * j;
            g += jt_info * r;
        }
        (h, g)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LmConfig {
    pub max_iters: usize,
    pub tol: f64,
    pub initial_damping: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            max_iters: 50,
            tol: 1e-12,
            initial_damping: 1e-4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GyroSolution<T: Real> {
    pub bias_g: Vector3<T>,
    pub final_cost: T,
    pub iterations: usize,
    pub converged: bool,
}

const MAX_DAMPING: f64 = 1e32;

/// Minimizes the weighted rotation residuals starting from a zero bias.
pub fn solve_gyro_bias<T: Real>(problem: &GyroProblem<T>, config: &LmConfig) -> Result<GyroSolution<T>> {
    solve_gyro_bias_from(problem, &Vector3::zeros(), config)
}

/// Same as [`solve_gyro_bias`] but starting from `start`.
pub fn solve_gyro_bias_from<T: Real>(
    problem: &GyroProblem<T>,
    start: &Vector3<T>,
    config: &LmConfig,
) -> Result<GyroSolution<T>> {
    let tol = T::lit(config.tol);
    let mut bias = *start;
    let mut cost = problem.cost(&bias);
    let mut damping = T::lit(config.initial_damping);
    let mut iterations = 0;
    let mut converged = false;

    'outer: while iterations < config.max_iters {
        iterations += 1;
        let (h, g) = problem.normal_equations(&bias);
        loop {
            let mut damped = h;
            for i in 0..3 {
                damped[(i, i)] += damping * h[(i, i)].max(T::default_epsilon());
            }
            let Some(chol) = damped.cholesky() else {
                damping *= T::lit(10.0);
                if damping > T::lit(MAX_DAMPING) {
                    return Err(Error::SingularProblem);
                }
                continue;
            };
            let step = -chol.solve(&g);
            if step.norm() <= tol * (bias.norm() + T::one()) {
                converged = true;
                break 'outer;
            }
            let candidate = bias + step;
            let new_cost = problem.cost(&candidate);
            if new_cost <= cost {
                let decrease = cost - new_cost;
                bias = candidate;
                damping = (damping / T::lit(10.0)).max(T::lit(1e-12));
                let done = decrease <= tol * cost;
                cost = new_cost;
                if done {
                    converged = true;
                    break 'outer;
                }
                break;
            }
            damping *= T::lit(10.0);
            if damping > T::lit(MAX_DAMPING) {
                // no descent left at machine precision
                converged = true;
                break 'outer;
            }
        }
    }

    Ok(GyroSolution {
        bias_g: bias,
        final_cost: cost,
        iterations,
        converged,
    })
}
