//! Real roots of dense polynomials through companion-matrix eigenvalues.

use nalgebra::{Complex, DMatrix};

use crate::scalar::Real;

const MAX_SWEEPS: usize = 60;

/// Horner evaluation of `Σ coeffs[i]·xⁱ` and its derivative.
pub fn eval_with_derivative<T: Real>(coeffs: &[T], x: T) -> (T, T) {
    let mut value = T::zero();
    let mut deriv = T::zero();
    for &c in coeffs.iter().rev() {
        deriv = deriv * x + value;
        value = value * x + c;
    }
    (value, deriv)
}

pub fn eval<T: Real>(coeffs: &[T], x: T) -> T {
    coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * x + c)
}

/// Real roots of a polynomial with ascending coefficients, sorted ascending.
///
/// The variable is rescaled so the monic polynomial has roots of order one
/// and coefficients bounded by one, then the companion matrix eigenvalues are
/// taken. Eigenvalues with `|Im| ≤ tol·(1 + |Re|)` count as real (`tol` is
/// 1e-8 in double precision) and are refined with Newton steps on the
/// original polynomial.
pub fn real_roots<T: Real>(coeffs: &[T]) -> Vec<T> {
    let Some(degree) = coeffs.iter().rposition(|c| *c != T::zero()) else {
        return Vec::new();
    };
    if degree == 0 {
        return Vec::new();
    }
    let lead = coeffs[degree];

    // Fujiwara-style root scale
    let mut sigma = T::zero();
    for (i, &c) in coeffs[..degree].iter().enumerate() {
        let ratio = (c / lead).abs();
        if ratio > T::zero() {
            let r = ratio.powf(T::one() / T::from_usize(degree - i).unwrap());
            sigma = sigma.max(r);
        }
    }
    if sigma == T::zero() {
        // xⁿ = 0
        return vec![T::zero()];
    }

    // monic coefficients of p(σy)/(lead·σⁿ); each has magnitude at most one,
    // and forming them root-wise keeps σⁿ from overflowing
    let monic: Vec<T> = (0..degree)
        .map(|i| {
            let a = coeffs[i] / lead;
            let k = degree - i;
            let mag = (a.abs().powf(T::one() / T::from_usize(k).unwrap()) / sigma).powi(k as i32);
            if a < T::zero() {
                -mag
            } else {
                mag
            }
        })
        .collect();

    let tol = T::lit(T::REAL_ROOT_TOL);
    let companion = DMatrix::<T>::from_fn(degree, degree, |i, j| companion_entry(&monic, i, j));
    let Some(eigenvalues) = hessenberg_eigenvalues(&companion) else {
        return Vec::new();
    };
    let mut roots: Vec<T> = eigenvalues
        .into_iter()
        .filter(|z| z.im.abs() <= tol * (T::one() + z.re.abs()))
        .map(|z| polish(coeffs, z.re * sigma))
        .collect();
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    roots
}

/// Companion matrix of a monic polynomial given its lower coefficients, with
/// the coefficients along the first row. In this form the QR shifts start at
/// zero, which settles small roots quickly and needs fewer sweeps overall
/// than the last-column form.
fn companion_entry<T: Real>(monic: &[T], i: usize, j: usize) -> T {
    let n = monic.len();
    if i == 0 {
        -monic[n - 1 - j]
    } else if i == j + 1 {
        T::one()
    } else {
        T::zero()
    }
}

/// Eigenvalues of an upper Hessenberg matrix by the implicit double-shift QR
/// iteration, without accumulating the orthogonal factor.
///
/// Gives up (returns `None`) when one eigenvalue needs more than
/// `MAX_SWEEPS` sweeps; exceptional shifts are tried every tenth sweep.
pub fn hessenberg_eigenvalues<T: Real>(h: &DMatrix<T>) -> Option<Vec<Complex<T>>> {
    let n = h.nrows();
    let mut a = h.clone();
    let eps = T::default_epsilon();
    let sign = |m: T, s: T| if s >= T::zero() { m.abs() } else { -m.abs() };
    let mut anorm = T::zero();
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }
    let mut out = vec![Complex::new(T::zero(), T::zero()); n];
    let mut shift = T::zero();
    let mut nn = n as isize - 1;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let nn_u = nn as usize;
            // look for a negligible subdiagonal element
            let mut l = nn_u;
            while l > 0 {
                let mut s = a[(l - 1, l - 1)].abs() + a[(l, l)].abs();
                if s == T::zero() {
                    s = anorm;
                }
                if a[(l, l - 1)].abs() <= eps * s {
                    a[(l, l - 1)] = T::zero();
                    break;
                }
                l -= 1;
            }
            let mut x = a[(nn_u, nn_u)];
            if l == nn_u {
                out[nn_u] = Complex::new(x + shift, T::zero());
                nn -= 1;
                break;
            }
            let mut y = a[(nn_u - 1, nn_u - 1)];
            let mut w = a[(nn_u, nn_u - 1)] * a[(nn_u - 1, nn_u)];
            if l == nn_u - 1 {
                // trailing 2x2 block
                let p = T::lit(0.5) * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                x += shift;
                if q >= T::zero() {
                    let z = p + sign(z, p);
                    let hi = x + z;
                    let lo = if z != T::zero() { x - w / z } else { hi };
                    out[nn_u - 1] = Complex::new(hi, T::zero());
                    out[nn_u] = Complex::new(lo, T::zero());
                } else {
                    out[nn_u] = Complex::new(x + p, -z);
                    out[nn_u - 1] = Complex::new(x + p, z);
                }
                nn -= 2;
                break;
            }
            if its == MAX_SWEEPS {
                return None;
            }
            if its > 0 && its % 10 == 0 {
                shift += x;
                for i in 0..=nn_u {
                    a[(i, i)] -= x;
                }
                let s = a[(nn_u, nn_u - 1)].abs() + a[(nn_u - 1, nn_u - 2)].abs();
                x = T::lit(0.75) * s;
                y = x;
                w = T::lit(-0.4375) * s * s;
            }
            its += 1;

            // two consecutive small subdiagonal elements
            let (mut p, mut q, mut r);
            let mut m = nn_u - 2;
            loop {
                let z = a[(m, m)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[(m + 1, m)] + a[(m, m + 1)];
                q = a[(m + 1, m + 1)] - z - rr - ss;
                r = a[(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[(m, m - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[(m - 1, m - 1)].abs() + z.abs() + a[(m + 1, m + 1)].abs());
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in m..nn_u - 1 {
                a[(i + 2, i)] = T::zero();
                if i != m {
                    a[(i + 2, i - 1)] = T::zero();
                }
            }

            // double QR step on rows l..=nn and columns m..=nn
            for k in m..nn_u {
                if k != m {
                    p = a[(k, k - 1)];
                    q = a[(k + 1, k - 1)];
                    r = if k + 1 != nn_u { a[(k + 2, k - 1)] } else { T::zero() };
                    x = p.abs() + q.abs() + r.abs();
                    if x != T::zero() {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s == T::zero() {
                    continue;
                }
                if k == m {
                    if l != m {
                        a[(k, k - 1)] = -a[(k, k - 1)];
                    }
                } else {
                    a[(k, k - 1)] = -s * x;
                }
                p += s;
                x = p / s;
                y = q / s;
                let z = r / s;
                q /= p;
                r /= p;
                for j in k..=nn_u {
                    let mut p = a[(k, j)] + q * a[(k + 1, j)];
                    if k + 1 != nn_u {
                        p += r * a[(k + 2, j)];
                        a[(k + 2, j)] -= p * z;
                    }
                    a[(k + 1, j)] -= p * y;
                    a[(k, j)] -= p * x;
                }
                for i in l..=nn_u.min(k + 3) {
                    let mut p = x * a[(i, k)] + y * a[(i, k + 1)];
                    if k + 1 != nn_u {
                        p += z * a[(i, k + 2)];
                        a[(i, k + 2)] -= p * r;
                    }
                    a[(i, k + 1)] -= p * q;
                    a[(i, k)] -= p;
                }
            }
        }
    }
    Some(out)
}

fn polish<T: Real>(coeffs: &[T], mut x: T) -> T {
    let (mut fx, _) = eval_with_derivative(coeffs, x);
    for _ in 0..8 {
        let (_, d) = eval_with_derivative(coeffs, x);
        if d == T::zero() {
            break;
        }
        let next = x - fx / d;
        let f_next = eval(coeffs, next);
        if !(f_next.abs() < fx.abs()) {
            break;
        }
        x = next;
        fx = f_next;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Schur;
    use rand::{Rng, SeedableRng};

    fn sorted(mut v: Vec<Complex<f64>>) -> Vec<Complex<f64>> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn hessenberg_qr_agrees_with_schur() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in 1..=9 {
            for _ in 0..50 {
                let h = DMatrix::<f64>::from_fn(n, n, |i, j| {
                    if i > j + 1 {
                        0.0
                    } else {
                        rng.random_range(-3.0..3.0)
                    }
                });
                let ours = sorted(hessenberg_eigenvalues(&h).unwrap());
                let theirs = sorted(Schur::new(h.clone()).complex_eigenvalues().iter().copied().collect());
                let scale = 1.0 + h.abs().max();
                for (a, b) in ours.iter().zip(&theirs) {
                    assert!((a - b).norm() < 1e-8 * scale, "n={n}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn hessenberg_qr_handles_zero_and_triangular_input() {
        let zero = DMatrix::<f64>::zeros(4, 4);
        assert!(hessenberg_eigenvalues(&zero).unwrap().iter().all(|z| z.norm() == 0.0));
        let tri = DMatrix::<f64>::from_fn(3, 3, |i, j| if i <= j { (i + 2 * j + 1) as f64 } else { 0.0 });
        let eig = sorted(hessenberg_eigenvalues(&tri).unwrap());
        assert_eq!(eig.iter().map(|z| z.re).collect::<Vec<_>>(), vec![1.0, 4.0, 7.0]);
    }

    fn from_roots(roots: &[f64]) -> Vec<f64> {
        let mut c = vec![1.0];
        for &r in roots {
            let mut next = vec![0.0; c.len() + 1];
            for (i, &ci) in c.iter().enumerate() {
                next[i + 1] += ci;
                next[i] -= r * ci;
            }
            c = next;
        }
        c
    }

    #[test]
    fn recovers_known_roots() {
        let truth = [-3.0, -0.5, 0.25, 2.0, 7.0, 11.0];
        let found = real_roots(&from_roots(&truth));
        assert_eq!(found.len(), 6);
        for (a, b) in found.iter().zip(truth) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn skips_complex_pairs() {
        // (x² + 1)(x - 2)
        let found = real_roots(&[-2.0f64, 1.0, -2.0, 1.0]);
        assert_eq!(found.len(), 1);
        assert!((found[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn handles_widely_scaled_roots() {
        let truth = [-4.0e6, -1.0e3, 2.0e4, 5.0e5];
        let coeffs: Vec<f64> = from_roots(&truth).iter().map(|c| c * -64.0 * 96.2361).collect();
        let found = real_roots(&coeffs);
        assert_eq!(found.len(), 4);
        for (a, b) in found.iter().zip(truth) {
            assert!((a - b).abs() <= 1e-9 * b.abs(), "{a} vs {b}");
        }
    }

    #[test]
    fn degenerate_inputs() {
        assert!(real_roots::<f64>(&[0.0, 0.0]).is_empty());
        assert!(real_roots(&[3.0]).is_empty());
        assert_eq!(real_roots(&[0.0, 0.0, 2.0]), vec![0.0]);
    }

    #[test]
    fn wide_range_in_single_precision() {
        // real roots near 0.314 and -2.95e5 with coefficients spanning 1e3..1e30.
        // The other four form a tight complex cluster that single precision
        // cannot resolve, so near-real members of it may also be reported.
        let c: [f32; 7] = [2.2778097e29, -7.244905e29, -2.2656127e25, -2.8188466e20, -1.735537e15, -5.247961e9, -6159.111];
        let r = real_roots(&c);
        assert!(r.iter().any(|x| (x / -295246.57 - 1.0).abs() < 1e-4), "{r:?}");
        assert!(r.iter().any(|x| (x - 0.3143985).abs() < 1e-5), "{r:?}");
        assert!(r.len() <= 4, "{r:?}");
    }
}
