//! Quadrature, Stieltjes integrals against a [`Distribution`] and the dense
//! linear solves behind the embedded chain.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::distributions::{Density, Distribution};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Default absolute tolerance for quadrature.
pub const QUAD_TOL: f64 = 1e-10;
/// Tail mass dropped when truncating an improper integral.
pub const TAIL_MASS: f64 = 1e-12;
/// Maximum bisection depth of the adaptive Simpson rule.
pub const MAX_DEPTH: u32 = 60;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("adaptive quadrature did not converge on [{a}, {b}] (partial estimate {estimate})")]
    NonConvergence { a: f64, b: f64, estimate: f64 },
    #[error("invalid integration interval [{a}, {b}]")]
    Interval { a: f64, b: f64 },
    #[error("matrix must be square with matching vector length")]
    Shape,
    #[error("chain is reducible; states {states:?} are not mutually reachable with state 0")]
    Reducible { states: Vec<usize> },
    #[error("no path to absorption from states {states:?}")]
    NoAbsorption { states: Vec<usize> },
    #[error("linear system is numerically singular")]
    Singular,
}

struct Simpson<'a, F> {
    f: &'a F,
    failed: bool,
}

impl<F: Fn(f64) -> f64> Simpson<'_, F> {
    #[allow(clippy::too_many_arguments)]
    fn step(&mut self, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = (self.f)(lm);
        let frm = (self.f)(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        let converged = delta.abs() <= 15.0 * tol
            || delta.abs() <= 64.0 * f64::EPSILON * (left.abs() + right.abs())
            || m <= a
            || m >= b;
        if converged {
            return left + right + delta / 15.0;
        }
        if depth == 0 {
            self.failed = true;
            return left + right + delta / 15.0;
        }
        self.step(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + self.step(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `tol` (for smooth integrands).
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64, NumericsError> {
    if !(a.is_finite() && b.is_finite() && a <= b) || tol.is_nan() || tol <= 0.0 {
        return Err(NumericsError::Interval { a, b });
    }
    if a == b {
        return Ok(0.0);
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut s = Simpson { f: &f, failed: false };
    let estimate = s.step(a, b, fa, fm, fb, whole, tol, MAX_DEPTH);
    if s.failed || !estimate.is_finite() {
        Err(NumericsError::NonConvergence { a, b, estimate })
    } else {
        Ok(estimate)
    }
}

/// [`integrate`] applied piecewise between the sorted `breaks` that fall
/// inside `(a, b)`. Kinks and jumps of the integrand belong in `breaks`;
/// each piece sees one-sided limits at its ends.
pub fn integrate_pieces<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: f64,
) -> Result<f64, NumericsError> {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    pts.push(a);
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let share = tol / (pts.len() - 1).max(1) as f64;
    pts.windows(2)
        .map(|w| {
            let (lo, hi) = (w[0], w[1]);
            let inner = |x: f64| {
                if x == lo {
                    f(lo.next_up().min(hi))
                } else if x == hi {
                    f(hi.next_down().max(lo))
                } else {
                    f(x)
                }
            };
            integrate(inner, lo, hi, share)
        })
        .sum()
}

/// Points at which a law's density changes character: fractions and
/// multiples of its mean, plus the offset of a point mass.
pub fn scale_points(d: &Distribution) -> Vec<f64> {
    if let Distribution::Deterministic { offset } = *d {
        return vec![offset];
    }
    let m = d.mean();
    [1e-3, 1e-2, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0].iter().map(|k| k * m).collect()
}

/// `∫ g(x) dF(x)` over `[0, upper]` (closed at both ends).
///
/// A point mass collapses to a single evaluation of `g`. Continuous laws are
/// integrated up to `min(upper, truncation_point(TAIL_MASS))`; `breaks` adds
/// discontinuities of `g` to the law's own scale points.
pub fn stieltjes_upto<G: Fn(f64) -> f64>(
    g: G,
    d: &Distribution,
    upper: f64,
    breaks: &[f64],
    tol: f64,
) -> Result<f64, NumericsError> {
    match d.density(0.0) {
        Density::PointMass { at } => Ok(if at <= upper { g(at) } else { 0.0 }),
        Density::Continuous(_) => {
            let hi = upper.min(d.truncation_point(TAIL_MASS));
            if hi <= 0.0 {
                return Ok(0.0);
            }
            let mut pts = scale_points(d);
            pts.extend_from_slice(breaks);
            integrate_pieces(|x| g(x) * d.pdf(x).unwrap_or(0.0), 0.0, hi, &pts, tol)
        }
    }
}

/// `∫₀^∞ g(x) dF(x)` for a law `d`.
pub fn stieltjes<G: Fn(f64) -> f64>(g: G, d: &Distribution, tol: f64) -> Result<f64, NumericsError> {
    stieltjes_upto(g, d, f64::INFINITY, &[], tol)
}

/// States reachable from `start` along positive entries of `m`.
fn reachable(m: &Matrix, start: usize, forward: bool) -> Vec<bool> {
    let n = m.nrows();
    let mut seen = vec![false; n];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(i) = stack.pop() {
        for j in 0..n {
            let w = if forward { m[(i, j)] } else { m[(j, i)] };
            if w > 0.0 && !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen
}

/// Stationary vector of a row-stochastic matrix: solves `v = vP`, `Σv = 1`
/// with one balance equation replaced by the normalization row.
pub fn dtmc_stationary(p: &Matrix) -> Result<Vector, NumericsError> {
    let n = p.nrows();
    if n == 0 || p.ncols() != n {
        return Err(NumericsError::Shape);
    }
    let fwd = reachable(p, 0, true);
    let bwd = reachable(p, 0, false);
    let bad: Vec<usize> = (0..n).filter(|&i| !(fwd[i] && bwd[i])).collect();
    if !bad.is_empty() {
        return Err(NumericsError::Reducible { states: bad });
    }
    let mut a = p.transpose() - Matrix::identity(n, n);
    a.row_mut(n - 1).fill(1.0);
    let mut rhs = Vector::zeros(n);
    rhs[n - 1] = 1.0;
    let v = a.lu().solve(&rhs).ok_or(NumericsError::Singular)?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(NumericsError::Singular);
    }
    // Round-off can leave tiny negative entries.
    let v = v.map(|x| x.max(0.0));
    let total = v.sum();
    Ok(v / total)
}

/// Expected visits before absorption: solves `V = α + V M`.
pub fn absorbing_visits(m: &Matrix, alpha: &Vector) -> Result<Vector, NumericsError> {
    let n = m.nrows();
    if m.ncols() != n || alpha.len() != n {
        return Err(NumericsError::Shape);
    }
    let leaks: Vec<bool> = (0..n).map(|i| 1.0 - m.row(i).sum() > 1e-15).collect();
    let mut trapped = Vec::new();
    for i in 0..n {
        let reach = reachable(m, i, true);
        if !(0..n).any(|j| reach[j] && leaks[j]) {
            trapped.push(i);
        }
    }
    let from_alpha: Vec<bool> = {
        let mut seen = vec![false; n];
        for s in (0..n).filter(|&s| alpha[s] > 0.0) {
            for (j, r) in reachable(m, s, true).into_iter().enumerate() {
                seen[j] |= r;
            }
        }
        seen
    };
    let trapped: Vec<usize> = trapped.into_iter().filter(|&i| from_alpha[i]).collect();
    if !trapped.is_empty() {
        return Err(NumericsError::NoAbsorption { states: trapped });
    }
    let a = (Matrix::identity(n, n) - m).transpose();
    let v = a.lu().solve(alpha).ok_or(NumericsError::Singular)?;
    if v.iter().any(|x| !x.is_finite() || *x < -1e-9) {
        return Err(NumericsError::Singular);
    }
    Ok(v.map(|x| x.max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn integrates_constant() {
        assert!((integrate(|_| 1.0, 0.0, 5.0, 1e-12).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn integrates_exponential() {
        let v = integrate(|t| (-t).exp(), 0.0, 50.0, 1e-10).unwrap();
        assert!((v - (1.0 - (-50.0f64).exp())).abs() < 1e-10);
    }

    #[test]
    fn integrates_gamma_two() {
        let v = integrate(|t| t * (-t).exp(), 0.0, 60.0, 1e-10).unwrap();
        let exact = 1.0 - 61.0 * (-60.0f64).exp();
        assert!((v - exact).abs() < 1e-10);
    }

    #[test]
    fn non_convergence_carries_estimate() {
        // Unbounded integrand near the left end.
        let err = integrate(|t: f64| 1.0 / t.sqrt().max(1e-300), 0.0, 1.0, 1e-14).unwrap_err();
        assert!(matches!(err, NumericsError::NonConvergence { estimate, .. } if estimate > 0.0));
    }

    #[test]
    fn stieltjes_total_probability() {
        for d in [
            Distribution::exponential(0.3).unwrap(),
            Distribution::erlang(0.02, 3).unwrap(),
            Distribution::hypoexponential(0.0013674, 0.004386).unwrap(),
            Distribution::deterministic(2.0).unwrap(),
        ] {
            let v = stieltjes(|_| 1.0, &d, QUAD_TOL).unwrap();
            assert!((v - 1.0).abs() < 1e-10, "{d:?}: {v}");
        }
    }

    #[test]
    fn stieltjes_exponential_race() {
        let (kappa, omega) = (120.5, 0.0010432);
        let g = Distribution::exponential(omega).unwrap();
        let d = Distribution::exponential(kappa).unwrap();
        let v = stieltjes(|x| g.survival(x), &d, QUAD_TOL).unwrap();
        assert!((v - kappa / (kappa + omega)).abs() < 1e-10);
    }

    #[test]
    fn stieltjes_mean_identity() {
        let d = Distribution::erlang(0.5, 3).unwrap();
        let v = stieltjes(|x| x, &d, QUAD_TOL).unwrap();
        assert!((v - 6.0).abs() < 1e-9);
    }

    #[test]
    fn stieltjes_point_mass_is_exact() {
        let d = Distribution::deterministic(1.7).unwrap();
        let g = |x: f64| (x * 3.1).sin() / (1.0 + x);
        assert_eq!(stieltjes(g, &d, QUAD_TOL).unwrap(), g(1.7));
        assert_eq!(stieltjes_upto(g, &d, 1.0, &[], QUAD_TOL).unwrap(), 0.0);
    }

    #[test]
    fn stationary_small_cases() {
        let v = dtmc_stationary(&Matrix::identity(1, 1)).unwrap();
        assert_eq!(v.as_slice(), &[1.0]);
        let p = Matrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let v = dtmc_stationary(&p).unwrap();
        assert!((v[0] - 0.5).abs() < 1e-15 && (v[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn stationary_names_unreachable_states() {
        let p = Matrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(dtmc_stationary(&p), Err(NumericsError::Reducible { states: vec![2] }));
    }

    fn power_iteration(p: &Matrix) -> Vector {
        // Lazy chain avoids periodicity.
        let n = p.nrows();
        let lazy = (p + Matrix::identity(n, n)) * 0.5;
        let mut v = Vector::from_element(n, 1.0 / n as f64);
        for _ in 0..100_000 {
            let next = lazy.tr_mul(&v);
            if (&next - &v).amax() < 1e-15 {
                return next;
            }
            v = next;
        }
        v
    }

    fn stochastic(n: usize, raw: &[f64]) -> Matrix {
        let mut p = Matrix::from_row_slice(n, n, &raw[..n * n]);
        for mut row in p.row_iter_mut() {
            let s = row.sum();
            row /= s;
        }
        p
    }

    #[test]
    fn absorbing_small_cases() {
        let v = absorbing_visits(&Matrix::zeros(2, 2), &Vector::from_vec(vec![1.0, 0.0])).unwrap();
        assert_eq!(v.as_slice(), &[1.0, 0.0]);
        let v = absorbing_visits(&Matrix::from_element(1, 1, 0.5), &Vector::from_element(1, 1.0)).unwrap();
        assert!((v[0] - 2.0).abs() < 1e-15);
        let err = absorbing_visits(&Matrix::identity(1, 1), &Vector::from_element(1, 1.0));
        assert_eq!(err, Err(NumericsError::NoAbsorption { states: vec![0] }));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn stationary_matches_power_iteration(raw in prop::collection::vec(0.01f64..1.0, 144)) {
            let p = stochastic(12, &raw);
            let v = dtmc_stationary(&p).unwrap();
            prop_assert!((p.tr_mul(&v) - &v).amax() <= 1e-10);
            prop_assert!((power_iteration(&p) - &v).amax() <= 1e-12);
        }

        #[test]
        fn stationary_is_permutation_invariant(raw in prop::collection::vec(0.01f64..1.0, 64), seed in 0usize..40320) {
            let n = 8;
            let p = stochastic(n, &raw);
            // Decode a permutation from the seed (factorial number system).
            let mut pool: Vec<usize> = (0..n).collect();
            let mut perm = Vec::new();
            let mut s = seed;
            for k in (1..=n).rev() {
                perm.push(pool.remove(s % k));
                s /= k;
            }
            let q = Matrix::from_fn(n, n, |i, j| p[(perm[i], perm[j])]);
            let v = dtmc_stationary(&p).unwrap();
            let w = dtmc_stationary(&q).unwrap();
            for i in 0..n {
                prop_assert!((w[i] - v[perm[i]]).abs() <= 1e-12);
            }
        }

        #[test]
        fn absorbing_visits_solve_the_balance(raw in prop::collection::vec(0.0f64..1.0, 110), leak in prop::collection::vec(0.05f64..0.9, 10)) {
            let n = 10;
            let mut m = Matrix::from_row_slice(n, n, &raw[..n * n]);
            for (i, mut row) in m.row_iter_mut().enumerate() {
                let s = row.sum().max(1e-12);
                row *= (1.0 - leak[i]) / s;
            }
            let mut alpha = Vector::zeros(n);
            alpha[0] = 1.0;
            let v = absorbing_visits(&m, &alpha).unwrap();
            let resid = &v - &alpha - m.tr_mul(&v);
            prop_assert!(resid.amax() <= 1e-9);
            prop_assert!(v.iter().all(|x| *x >= 0.0 && x.is_finite()));
        }
    }
}
