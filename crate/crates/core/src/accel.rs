//! Closed-form estimation of scale, accelerometer bias and gravity.
//!
//! Three consecutive keyframes give one linear residual in
//! `x = [s, bᵃ, g]` (velocities eliminated). Stacking them yields the quadratic
//! cost `C(x) = xᵀMx + mᵀx + Q` minimized under `xᵀWx = G²`, where `W` selects
//! the gravity components. The stationarity condition gives
//! `x(λ) = -(2M + 2λW)⁻¹m`, and substituting into the constraint leaves a
//! degree-6 polynomial in the multiplier `λ`. Its real roots are found from the
//! companion matrix, each is mapped back to a candidate `x`, and the feasible
//! candidate with the lowest cost wins.

use nalgebra::{Matrix3, Matrix4, SMatrix, SVector, Vector3};

use crate::error::{Error, Result};
use crate::keyframe::{Extrinsics, KeyframePose};
use crate::preintegration::PreintegratedDelta;
use crate::roots;
use crate::scalar::Real;

/// Magnitude of gravity, m/s².
pub const GRAVITY_MAGNITUDE: f64 = 9.81;

/// Relative deviation of the mean specific force from `G` below which a window
/// is considered unexcited.
pub const EXCITATION_THRESHOLD: f64 = 0.005;

/// Largest accepted 1-norm condition number of the `[s, bᵃ]` block of `2M`.
pub const MAX_CONDITION: f64 = 1e12;

pub type Matrix7<T> = SMatrix<T, 7, 7>;
pub type Vector7<T> = SVector<T, 7>;
pub type Matrix3x7<T> = SMatrix<T, 3, 7>;

/// Three consecutive keyframes and the two preintegrated intervals between them.
///
/// The deltas must already be integrated (or corrected) at the estimated
/// gyroscope bias; their accelerometer-bias linearization point may be anything.
#[derive(Clone, Copy, Debug)]
pub struct AccelTriplet<'a, T: Real> {
    pub poses: [&'a KeyframePose<T>; 3],
    pub deltas: [&'a PreintegratedDelta<T>; 2],
    pub extrinsics: &'a Extrinsics<T>,
}

/// Linear residual `r(x) = [α  A  B]·x - π` with covariance `Σ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualBlock<T: Real> {
    pub alpha: Vector3<T>,
    pub a: Matrix3<T>,
    pub b: Matrix3<T>,
    pub pi: Vector3<T>,
    pub sigma: Matrix3<T>,
    /// Gyroscope bias the deltas were evaluated at.
    pub bias_g: Vector3<T>,
}

impl<T: Real> ResidualBlock<T> {
    pub fn design(&self) -> Matrix3x7<T> {
        let mut m = Matrix3x7::zeros();
        m.fixed_view_mut::<3, 1>(0, 0).copy_from(&self.alpha);
        m.fixed_view_mut::<3, 3>(0, 1).copy_from(&self.a);
        m.fixed_view_mut::<3, 3>(0, 4).copy_from(&self.b);
        m
    }

    pub fn residual(&self, x: &Vector7<T>) -> Vector3<T> {
        self.design() * x - self.pi
    }

    /// Design matrix and constant term premultiplied by `L⁻¹`, where `Σ = LLᵀ`.
    pub fn whitened(&self) -> Result<(Matrix3x7<T>, Vector3<T>)> {
        let chol = self.sigma.cholesky().ok_or(Error::InvalidNoise)?;
        let l = chol.l();
        let design = l.solve_lower_triangular(&self.design()).ok_or(Error::InvalidNoise)?;
        let pi = l.solve_lower_triangular(&self.pi).ok_or(Error::InvalidNoise)?;
        Ok((design, pi))
    }

    /// `‖r(x)‖²_Σ`
    pub fn cost(&self, x: &Vector7<T>) -> Result<T> {
        let (design, pi) = self.whitened()?;
        Ok((design * x - pi).norm_squared())
    }
}

/// Assembles the residual block of one keyframe triplet.
pub fn build_residual_block<T: Real>(triplet: &AccelTriplet<'_, T>) -> ResidualBlock<T> {
    let half = T::lit(0.5);
    let [pose0, pose1, pose2] = triplet.poses;
    let [d01, d12] = triplet.deltas;
    let ext = triplet.extrinsics;
    let (dt01, dt12) = (d01.dt, d12.dt);
    let r0 = ext.body_rotation(pose0);
    let r1 = ext.body_rotation(pose1);

    // Deltas at zero accelerometer bias; they are exactly linear in bᵃ.
    let dp01 = d01.d_pos - d01.j_pos_ba * d01.bias_a;
    let dv01 = d01.d_vel - d01.j_vel_ba * d01.bias_a;
    let dp12 = d12.d_pos - d12.j_pos_ba * d12.bias_a;

    let a = r0 * d01.j_pos_ba / dt01 - r1 * d12.j_pos_ba / dt12 - r0 * d01.j_vel_ba;
    let b = Matrix3::identity() * (-half * (dt01 + dt12));
    let alpha = (pose2.position - pose1.position) / dt12 - (pose1.position - pose0.position) / dt01;
    let pi = r1 * dp12 / dt12 - r0 * dp01 / dt01
        + r0 * dv01
        + (pose1.rotation - pose0.rotation) * ext.t_cb / dt01
        - (pose2.rotation - pose1.rotation) * ext.t_cb / dt12;

    // π depends on (Δv₀₁, Δp₀₁) of the first interval and Δp₁₂ of the second;
    // the intervals share no samples and are treated as independent.
    let mut g0 = SMatrix::<T, 3, 6>::zeros();
    g0.fixed_view_mut::<3, 3>(0, 0).copy_from(&r0);
    g0.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-r0 / dt01));
    let g1 = r1 / dt12;
    let cov_p12 = d12.covariance.fixed_view::<3, 3>(6, 6).into_owned();
    let sigma = g0 * d01.cov_vel_pos() * g0.transpose() + g1 * cov_p12 * g1.transpose();
    let sigma = (sigma + sigma.transpose()) * half;

    ResidualBlock {
        alpha,
        a,
        b,
        pi,
        sigma,
        bias_g: d12.bias_g,
    }
}

/// Builds one block per interior keyframe of a run of keyframes.
///
/// `deltas[k]` covers the interval between `poses[k]` and `poses[k + 1]`.
pub fn build_residual_blocks<T: Real>(
    poses: &[KeyframePose<T>],
    deltas: &[PreintegratedDelta<T>],
    extrinsics: &Extrinsics<T>,
) -> Result<Vec<ResidualBlock<T>>> {
    if deltas.len() + 1 != poses.len() {
        return Err(Error::InvalidConfig(format!(
            "{} poses need {} intervals, got {}",
            poses.len(),
            poses.len().saturating_sub(1),
            deltas.len()
        )));
    }
    Ok((1..deltas.len())
        .map(|k| {
            build_residual_block(&AccelTriplet {
                poses: [&poses[k - 1], &poses[k], &poses[k + 1]],
                deltas: [&deltas[k - 1], &deltas[k]],
                extrinsics,
            })
        })
        .collect())
}

/// `C(x) = xᵀMx + mᵀx + Q` with the constraint `xᵀWx = G²`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticSystem<T: Real> {
    pub hessian: Matrix7<T>,
    pub linear: Vector7<T>,
    pub constant: T,
    pub gravity_magnitude: T,
    pub bias_g: Vector3<T>,
}

impl<T: Real> QuadraticSystem<T> {
    pub fn cost(&self, x: &Vector7<T>) -> T {
        x.dot(&(self.hessian * x)) + self.linear.dot(x) + self.constant
    }

    /// `W = diag(0, 0, 0, 0, 1, 1, 1)`
    pub fn constraint_matrix() -> Matrix7<T> {
        let mut w = Matrix7::zeros();
        for i in 4..7 {
            w[(i, i)] = T::one();
        }
        w
    }

    /// `2M + 2λW`
    pub fn lagrangian_matrix(&self, lambda: T) -> Matrix7<T> {
        let mut k = self.hessian * T::lit(2.0);
        for i in 4..7 {
            k[(i, i)] += T::lit(2.0) * lambda;
        }
        k
    }
}

/// Accumulates `M = Σ MₖᵀΣₖ⁻¹Mₖ`, `mᵀ = -2Σ πₖᵀΣₖ⁻¹Mₖ` and `Q = Σ πₖᵀΣₖ⁻¹πₖ`.
/// Blocks premultiplied by their noise square roots, so that each block's
/// cost is a plain squared norm.
#[derive(Clone, Debug)]
pub struct WhitenedBlocks<T: Real> {
    pub design: Vec<Matrix3x7<T>>,
    pub pi: Vec<Vector3<T>>,
    pub bias_g: Vector3<T>,
}

impl<T: Real> WhitenedBlocks<T> {
    pub fn new(blocks: &[ResidualBlock<T>]) -> Result<Self> {
        let (design, pi) = blocks.iter().map(|b| b.whitened()).collect::<Result<Vec<_>>>()?.into_iter().unzip();
        Ok(Self {
            design,
            pi,
            bias_g: blocks.first().map_or_else(Vector3::zeros, |b| b.bias_g),
        })
    }

    pub fn len(&self) -> usize {
        self.design.len()
    }

    pub fn is_empty(&self) -> bool {
        self.design.is_empty()
    }

    /// `Σₖ ‖rₖ(x)‖²_Σ`, summed block by block.
    pub fn cost(&self, x: &Vector7<T>) -> T {
        self.design
            .iter()
            .zip(&self.pi)
            .fold(T::zero(), |acc, (d, p)| acc + (d * x - p).norm_squared())
    }

    pub fn quadratic(&self) -> Result<QuadraticSystem<T>> {
        if self.len() < 3 {
            return Err(Error::Underdetermined { needed: 3, got: self.len() });
        }
        let mut hessian = Matrix7::zeros();
        let mut linear = Vector7::zeros();
        let mut constant = T::zero();
        for (design, pi) in self.design.iter().zip(&self.pi) {
            hessian += design.transpose() * design;
            linear -= design.transpose() * pi * T::lit(2.0);
            constant += pi.norm_squared();
        }
        let hessian = (hessian + hessian.transpose()) * T::lit(0.5);
        Ok(QuadraticSystem {
            hessian,
            linear,
            constant,
            gravity_magnitude: T::lit(GRAVITY_MAGNITUDE),
            bias_g: self.bias_g,
        })
    }
}

pub fn assemble_quadratic<T: Real>(blocks: &[ResidualBlock<T>]) -> Result<QuadraticSystem<T>> {
    if blocks.len() < 3 {
        return Err(Error::Underdetermined { needed: 3, got: blocks.len() });
    }
    WhitenedBlocks::new(blocks)?.quadratic()
}

#[derive(Clone, Debug)]
pub struct PolynomialTerms<T: Real> {
    /// Upper-left 4×4 block of `2M`.
    pub a: Matrix4<T>,
    /// Upper-right 4×3 block of `2M`.
    pub b: SMatrix<T, 4, 3>,
    /// Lower-right 3×3 block of `2M`.
    pub d: Matrix3<T>,
    /// Schur complement `S = D - BᵀA⁻¹B`.
    pub s: Matrix3<T>,
    /// Adjugate `det(S)·S⁻¹`.
    pub s_adj: Matrix3<T>,
    /// `tr(S)·I - S`
    pub u: Matrix3<T>,
    /// `2Sᴬ + U²`
    pub x: Matrix3<T>,
    /// `SᴬU + USᴬ`
    pub y: Matrix3<T>,
    /// Quadratic-form matrices multiplying `16λ⁴, 16λ³, 4λ², 2λ, 1` (in that order).
    pub forms: [Matrix7<T>; 5],
    /// 1-norm condition number of `a`.
    pub condition_number: T,
}

/// Adjugate of a 3×3 matrix (transposed cofactor matrix); defined even when singular.
pub fn adjugate3<T: Real>(m: &Matrix3<T>) -> Matrix3<T> {
    let c = |r0: usize, r1: usize, c0: usize, c1: usize| m[(r0, c0)] * m[(r1, c1)] - m[(r0, c1)] * m[(r1, c0)];
    Matrix3::new(
        c(1, 2, 1, 2),
        -c(0, 2, 1, 2),
        c(0, 1, 1, 2),
        -c(1, 2, 0, 2),
        c(0, 2, 0, 2),
        -c(0, 1, 0, 2),
        c(1, 2, 0, 1),
        -c(0, 2, 0, 1),
        c(0, 1, 0, 1),
    )
}

/// Largest absolute column sum.
fn norm1<T: Real>(m: &Matrix4<T>) -> T {
    m.column_iter()
        .map(|c| c.iter().fold(T::zero(), |acc, v| acc + v.abs()))
        .fold(T::zero(), |acc, v| acc.max(v))
}

/// Computes the block partition and the five quadratic forms of the expansion.
pub fn polynomial_terms<T: Real>(sys: &QuadraticSystem<T>) -> Result<PolynomialTerms<T>> {
    let two_m = sys.hessian * T::lit(2.0);
    let a: Matrix4<T> = two_m.fixed_view::<4, 4>(0, 0).into_owned();
    let b: SMatrix<T, 4, 3> = two_m.fixed_view::<4, 3>(0, 4).into_owned();
    let d: Matrix3<T> = two_m.fixed_view::<3, 3>(4, 4).into_owned();

    // A is a Gram matrix, so failure to factor means it is singular
    let a_inv = a.cholesky().ok_or(Error::Degenerate(f64::INFINITY))?.inverse();
    let condition_number = norm1(&a) * norm1(&a_inv);
    if !(condition_number <= T::lit(MAX_CONDITION)) {
        return Err(Error::Degenerate(condition_number.as_f64()));
    }
    // A⁻¹B, shared by every off-diagonal block
    let ainv_b = a_inv * b;

    let s = d - b.transpose() * ainv_b;
    let s = (s + s.transpose()) * T::lit(0.5);
    let s_adj = adjugate3(&s);
    let u = Matrix3::identity() * s.trace() - s;
    let x = s_adj * T::lit(2.0) + u * u;
    let y = s_adj * u + u * s_adj;

    let form = |z: &Matrix3<T>| -> Matrix7<T> {
        let mut f = Matrix7::zeros();
        let off = -ainv_b * z;
        f.fixed_view_mut::<4, 4>(0, 0).copy_from(&(ainv_b * z * ainv_b.transpose()));
        f.fixed_view_mut::<4, 3>(0, 4).copy_from(&off);
        f.fixed_view_mut::<3, 4>(4, 0).copy_from(&off.transpose());
        f.fixed_view_mut::<3, 3>(4, 4).copy_from(z);
        f
    };
    let forms = [
        form(&Matrix3::identity()),
        form(&u),
        form(&x),
        form(&y),
        form(&(s_adj * s_adj)),
    ];

    Ok(PolynomialTerms {
        a,
        b,
        d,
        s,
        s_adj,
        u,
        x,
        y,
        forms,
        condition_number,
    })
}

/// Degree-6 polynomial in λ whose roots are the stationary multipliers.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaPolynomial<T: Real> {
    /// Ascending coefficients: `coeffs[i]` multiplies `λⁱ`.
    pub coeffs: [T; 7],
    /// Coefficients of `p(λ) = det(S + 2λI)`, ascending.
    pub det_coeffs: [T; 4],
    pub condition_number: T,
}

impl<T: Real> LambdaPolynomial<T> {
    pub fn eval(&self, lambda: T) -> T {
        roots::eval(&self.coeffs, lambda)
    }

    pub fn det_eval(&self, lambda: T) -> T {
        roots::eval(&self.det_coeffs, lambda)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|c| *c != T::zero()).unwrap_or(0)
    }
}

/// `P(λ) = LHS(λ) - G²·p(λ)²` with `LHS` built from the five quadratic forms.
pub fn build_lambda_polynomial<T: Real>(sys: &QuadraticSystem<T>) -> Result<LambdaPolynomial<T>> {
    let terms = polynomial_terms(sys)?;
    let m = &sys.linear;
    let q = |k: usize| m.dot(&(terms.forms[k] * m));
    let (two, four, sixteen) = (T::lit(2.0), T::lit(4.0), T::lit(16.0));

    // det(S + 2λI) = 8λ³ + 4·tr(S)λ² + 2·tr(Sᴬ)λ + det(S)
    let det_coeffs = [terms.s.determinant(), two * terms.s_adj.trace(), four * terms.s.trace(), T::lit(8.0)];
    let mut det_sq = [T::zero(); 7];
    for (i, &a) in det_coeffs.iter().enumerate() {
        for (j, &b) in det_coeffs.iter().enumerate() {
            det_sq[i + j] += a * b;
        }
    }

    let lhs = [q(4), two * q(3), four * q(2), sixteen * q(1), sixteen * q(0), T::zero(), T::zero()];
    let g2 = sys.gravity_magnitude * sys.gravity_magnitude;
    let mut coeffs = [T::zero(); 7];
    for i in 0..7 {
        coeffs[i] = lhs[i] - g2 * det_sq[i];
    }
    Ok(LambdaPolynomial {
        coeffs,
        det_coeffs,
        condition_number: terms.condition_number,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diagnostics<T: Real> {
    /// Condition number of the `[s, bᵃ]` block of `2M` (analytic solver only).
    pub condition_number: Option<T>,
    pub num_real_roots: usize,
    pub scale_positive: bool,
    /// Set once the excitation check has been run for the window.
    pub excitation_ok: Option<bool>,
}

/// Estimated initialization parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitSolution<T: Real> {
    pub scale: T,
    pub bias_g: Vector3<T>,
    pub bias_a: Vector3<T>,
    pub gravity: Vector3<T>,
    /// Lagrange multiplier of the selected root (analytic solver only).
    pub lambda: Option<T>,
    pub cost: T,
    pub iterations: usize,
    pub converged: bool,
    pub diagnostics: Diagnostics<T>,
}

impl<T: Real> InitSolution<T> {
    /// `[s, bᵃ, g]`
    pub fn state(&self) -> Vector7<T> {
        state_vector(self.scale, &self.bias_a, &self.gravity)
    }
}

pub fn state_vector<T: Real>(scale: T, bias_a: &Vector3<T>, gravity: &Vector3<T>) -> Vector7<T> {
    let mut x = Vector7::zeros();
    x[0] = scale;
    x.fixed_rows_mut::<3>(1).copy_from(bias_a);
    x.fixed_rows_mut::<3>(4).copy_from(gravity);
    x
}

/// A stationary point of the Lagrangian for one real multiplier.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate<T: Real> {
    pub lambda: T,
    pub x: Vector7<T>,
    pub cost: T,
}

/// `x(λ) = -(2M + 2λW)⁻ᵀm`, or `None` when the matrix is singular.
pub fn candidate_for<T: Real>(sys: &QuadraticSystem<T>, lambda: T) -> Option<Candidate<T>> {
    let k = sys.lagrangian_matrix(lambda);
    let x = -k.transpose().lu().solve(&sys.linear)?;
    if !x.iter().all(|v| v.is_finite()) {
        return None;
    }
    Some(Candidate {
        lambda,
        x,
        cost: sys.cost(&x),
    })
}

/// Solves the gravity-norm constrained problem through the multiplier polynomial.
pub fn solve_constrained<T: Real>(sys: &QuadraticSystem<T>) -> Result<InitSolution<T>> {
    let poly = build_lambda_polynomial(sys)?;
    let lambdas = roots::real_roots(&poly.coeffs);
    let g = sys.gravity_magnitude;
    let feasibility = T::lit(T::FEASIBILITY_TOL) * g;

    let best = lambdas
        .iter()
        .filter_map(|&l| candidate_for(sys, l))
        .filter(|c| (c.x.fixed_rows::<3>(4).norm() - g).abs() < feasibility)
        .min_by(|a, b| a.cost.partial_cmp(&b.cost).unwrap_or(std::cmp::Ordering::Equal))
        .ok_or(Error::NoSolution)?;

    let x = refine_on_sphere(sys, &best.x);
    let scale = x[0];
    Ok(InitSolution {
        scale,
        bias_g: sys.bias_g,
        bias_a: x.fixed_rows::<3>(1).into_owned(),
        gravity: x.fixed_rows::<3>(4).into_owned(),
        lambda: Some(best.lambda),
        cost: sys.cost(&x),
        iterations: 0,
        converged: true,
        diagnostics: Diagnostics {
            condition_number: Some(poly.condition_number),
            num_real_roots: lambdas.len(),
            scale_positive: scale > T::zero(),
            excitation_ok: None,
        },
    })
}

/// Puts gravity exactly on the sphere and re-minimizes `[s, bᵃ]` for that gravity.
fn refine_on_sphere<T: Real>(sys: &QuadraticSystem<T>, x: &Vector7<T>) -> Vector7<T> {
    let gravity = x.fixed_rows::<3>(4).normalize() * sys.gravity_magnitude;
    let m_yy: Matrix4<T> = sys.hessian.fixed_view::<4, 4>(0, 0).into_owned();
    let m_yg: SMatrix<T, 4, 3> = sys.hessian.fixed_view::<4, 3>(0, 4).into_owned();
    let rhs = -(m_yg * gravity + sys.linear.fixed_rows::<4>(0) * T::lit(0.5));
    let y = m_yy.cholesky().map(|c| c.solve(&rhs)).unwrap_or_else(|| x.fixed_rows::<4>(0).into_owned());
    let mut out = *x;
    out.fixed_rows_mut::<4>(0).copy_from(&y);
    out.fixed_rows_mut::<3>(4).copy_from(&gravity);
    out
}

/// Weighted cost `Σₖ‖rₖ(x)‖²_Σₖ` summed block by block.
pub fn total_cost<T: Real>(blocks: &[ResidualBlock<T>], x: &Vector7<T>) -> Result<T> {
    blocks.iter().try_fold(T::zero(), |acc, b| Ok(acc + b.cost(x)?))
}

/// Assembles, solves and reports the block-summed cost of the optimum.
pub fn solve_analytic<T: Real>(blocks: &[ResidualBlock<T>]) -> Result<InitSolution<T>> {
    if blocks.len() < 3 {
        return Err(Error::Underdetermined { needed: 3, got: blocks.len() });
    }
    let whitened = WhitenedBlocks::new(blocks)?;
    let mut sol = solve_constrained(&whitened.quadratic()?)?;
    sol.cost = whitened.cost(&sol.state());
    Ok(sol)
}

/// `true` when the window's mean specific-force magnitude deviates from `G`
/// by at least 0.5 %, i.e. the motion is not close to constant velocity.
pub fn check_excitation<T: Real>(deltas: &[PreintegratedDelta<T>]) -> bool {
    let (sum, count) = deltas
        .iter()
        .fold((T::zero(), 0usize), |(s, n), d| (s + d.accel_norm_sum, n + d.num_samples));
    if count == 0 {
        return false;
    }
    let g = T::lit(GRAVITY_MAGNITUDE);
    let mean = sum / T::from_usize(count).unwrap();
    (mean - g).abs() / g >= T::lit(EXCITATION_THRESHOLD)
}
