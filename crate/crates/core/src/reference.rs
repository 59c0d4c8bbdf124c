//! Iterative reference solver for the accelerometer subproblem.
//!
//! Levenberg–Marquardt over `(s, bᵃ, g)` with gravity kept on the sphere of
//! radius `G` through a two-dimensional tangent perturbation. It minimizes the
//! same block cost as the closed-form solver, without priors, and serves as an
//! optimality check and a timing baseline. It is not a reimplementation of any
//! particular MAP initializer.

use nalgebra::{Matrix3, SMatrix, SVector, Vector3};

use crate::accel::{state_vector, Diagnostics, InitSolution, ResidualBlock, Vector7, WhitenedBlocks, GRAVITY_MAGNITUDE};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::so3;

type Matrix6<T> = SMatrix<T, 6, 6>;
type Vector6<T> = SVector<T, 6>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterativeConfig<T: Real> {
    pub initial_scale: T,
    pub initial_bias_a: Vector3<T>,
    /// Starting gravity; `None` uses [`initial_gravity`].
    pub gravity_init: Option<Vector3<T>>,
    pub max_iters: usize,
    pub tol: f64,
    pub initial_damping: f64,
}

impl<T: Real> Default for IterativeConfig<T> {
    fn default() -> Self {
        Self {
            initial_scale: T::one(),
            initial_bias_a: Vector3::zeros(),
            gravity_init: None,
            max_iters: 100,
            tol: 1e-12,
            initial_damping: 1e-4,
        }
    }
}

/// Default multi-start scales.
pub const DEFAULT_SCALES: [f64; 3] = [1.0, 4.0, 16.0];

/// Gravity guess from the blocks' constant terms.
///
/// Each `πₖ/τₖ` (with `Bₖ = -τₖI`) is the rotated mean specific force over the
/// triplet, so its negated mean points along gravity.
pub fn initial_gravity<T: Real>(blocks: &[ResidualBlock<T>]) -> Vector3<T> {
    let sum = blocks
        .iter()
        .fold(Vector3::zeros(), |acc, b| acc + b.pi / (-b.b[(0, 0)]));
    let g = T::lit(GRAVITY_MAGNITUDE);
    match sum.try_normalize(T::default_epsilon()) {
        Some(dir) => -dir * g,
        None => Vector3::new(T::zero(), T::zero(), -g),
    }
}

/// Two orthonormal vectors spanning the plane orthogonal to `g`.
fn tangent_basis<T: Real>(g: &Vector3<T>) -> (Vector3<T>, Vector3<T>) {
    let n = g.normalize();
    let seed = if n.x.abs() < T::lit(0.9) { Vector3::x() } else { Vector3::y() };
    let e1 = n.cross(&seed).normalize();
    let e2 = n.cross(&e1);
    (e1, e2)
}

/// Gauss-Newton system in `(s, bᵃ, δ₁, δ₂)`.
fn normal_equations<T: Real>(
    w: &WhitenedBlocks<T>,
    x: &Vector7<T>,
    tangent: &SMatrix<T, 7, 6>,
) -> (Matrix6<T>, Vector6<T>) {
    let mut h = Matrix6::zeros();
    let mut g = Vector6::zeros();
    for (d, p) in w.design.iter().zip(&w.pi) {
        let r = d * x - p;
        let j = d * tangent;
        h += j.transpose() * j;
        g += j.transpose() * r;
    }
    (h, g)
}

fn retract<T: Real>(x: &Vector7<T>, step: &Vector6<T>, basis: (Vector3<T>, Vector3<T>), g_norm: T) -> Vector7<T> {
    let mut out = *x;
    for i in 0..4 {
        out[i] += step[i];
    }
    let g: Vector3<T> = x.fixed_rows::<3>(4).into_owned();
    let rotated = so3::exp(&(basis.0 * step[4] + basis.1 * step[5])) * g;
    out.fixed_rows_mut::<3>(4).copy_from(&(rotated.normalize() * g_norm));
    out
}

/// Derivative of the state with respect to `(s, bᵃ, δ₁, δ₂)` at gravity `g`.
fn tangent_map<T: Real>(g: &Vector3<T>, basis: (Vector3<T>, Vector3<T>)) -> SMatrix<T, 7, 6> {
    let mut t = SMatrix::<T, 7, 6>::zeros();
    for i in 0..4 {
        t[(i, i)] = T::one();
    }
    let minus_g_hat: Matrix3<T> = -so3::hat(g);
    t.fixed_view_mut::<3, 1>(4, 4).copy_from(&(minus_g_hat * basis.0));
    t.fixed_view_mut::<3, 1>(4, 5).copy_from(&(minus_g_hat * basis.1));
    t
}

const MAX_DAMPING: f64 = 1e32;

/// Runs Levenberg–Marquardt from `config`'s starting point.
pub fn solve_iterative<T: Real>(blocks: &[ResidualBlock<T>], config: &IterativeConfig<T>) -> Result<InitSolution<T>> {
    if blocks.len() < 3 {
        return Err(Error::Underdetermined { needed: 3, got: blocks.len() });
    }
    if !(config.initial_scale > T::zero()) {
        return Err(Error::InvalidConfig("initial scale must be positive".into()));
    }
    let whitened = WhitenedBlocks::new(blocks)?;
    let g_norm = T::lit(GRAVITY_MAGNITUDE);
    let g0 = config.gravity_init.unwrap_or_else(|| initial_gravity(blocks));
    let g0 = g0.try_normalize(T::default_epsilon()).ok_or(Error::InvalidConfig("zero gravity guess".into()))? * g_norm;

    let tol = T::lit(config.tol);
    let mut x = state_vector(config.initial_scale, &config.initial_bias_a, &g0);
    let mut cost = whitened.cost(&x);
    let mut damping = T::lit(config.initial_damping);
    let mut iterations = 0;
    let mut converged = false;

    'outer: while iterations < config.max_iters {
        iterations += 1;
        let g: Vector3<T> = x.fixed_rows::<3>(4).into_owned();
        let basis = tangent_basis(&g);
        let (h, grad) = normal_equations(&whitened, &x, &tangent_map(&g, basis));
        loop {
            let mut damped = h;
            for i in 0..6 {
                damped[(i, i)] += damping * h[(i, i)].max(T::default_epsilon());
            }
            let Some(chol) = damped.cholesky() else {
                damping *= T::lit(10.0);
                if damping > T::lit(MAX_DAMPING) {
                    return Err(Error::SingularProblem);
                }
                continue;
            };
            let step = -chol.solve(&grad);
            let scale_of_x = x.fixed_rows::<4>(0).norm() + T::one();
            if step.norm() <= tol * scale_of_x {
                converged = true;
                break 'outer;
            }
            let candidate = retract(&x, &step, basis, g_norm);
            let new_cost = whitened.cost(&candidate);
            if new_cost <= cost {
                let decrease = cost - new_cost;
                x = candidate;
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
                break 'outer;
            }
        }
    }

    let scale = x[0];
    Ok(InitSolution {
        scale,
        bias_g: blocks[0].bias_g,
        bias_a: x.fixed_rows::<3>(1).into_owned(),
        gravity: x.fixed_rows::<3>(4).into_owned(),
        lambda: None,
        cost,
        iterations,
        converged,
        diagnostics: Diagnostics {
            condition_number: None,
            num_real_roots: 0,
            scale_positive: scale > T::zero(),
            excitation_ok: None,
        },
    })
}

/// Runs [`solve_iterative`] once per initial scale and keeps the converged run
/// with the lowest cost (ties go to the smallest initial scale).
pub fn solve_multi_start<T: Real>(
    blocks: &[ResidualBlock<T>],
    scales: &[T],
    base: &IterativeConfig<T>,
) -> Result<InitSolution<T>> {
    if scales.is_empty() {
        return Err(Error::InvalidConfig("empty scale list".into()));
    }
    let mut ordered = scales.to_vec();
    ordered.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut best: Option<InitSolution<T>> = None;
    for &s in &ordered {
        let config = IterativeConfig { initial_scale: s, ..*base };
        let Ok(sol) = solve_iterative(blocks, &config) else {
            continue;
        };
        if !sol.converged {
            continue;
        }
        if best.as_ref().is_none_or(|b| sol.cost < b.cost) {
            best = Some(sol);
        }
    }
    best.ok_or(Error::NonConvergence(scales.len()))
}
