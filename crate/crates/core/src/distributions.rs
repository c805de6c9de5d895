//! Lifetime laws used by the aging model.
//!
//! Every duration is expressed in hours and every rate per hour. The four
//! families cover all the laws the model needs: exponential, Erlang,
//! two-phase hypoexponential and a deterministic point mass (the unit-step
//! trigger variables).

use rand::Rng;
use rand_distr::{Distribution as _, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistributionError {
    #[error("rate must be positive and finite, got {0}")]
    Rate(f64),
    #[error("Erlang shape must be at least 1")]
    Shape,
    #[error("offset must be finite and non-negative, got {0}")]
    Offset(f64),
    #[error("mean must be positive and finite, got {0}")]
    Mean(f64),
}

/// A lifetime distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    Exponential { rate: f64 },
    Erlang { rate: f64, shape: u32 },
    /// Two exponential phases in sequence.
    Hypoexponential { rate1: f64, rate2: f64 },
    /// Unit step at `offset`: the variable equals `offset` with probability one.
    Deterministic { offset: f64 },
}

/// Density of a law at a point: either an ordinary density value or a marker
/// that the law is a unit point mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Density {
    Continuous(f64),
    PointMass { at: f64 },
}

fn check_rate(rate: f64) -> Result<f64, DistributionError> {
    if rate.is_finite() && rate > 0.0 {
        Ok(rate)
    } else {
        Err(DistributionError::Rate(rate))
    }
}

impl Distribution {
    pub fn exponential(rate: f64) -> Result<Self, DistributionError> {
        Ok(Self::Exponential { rate: check_rate(rate)? })
    }

    pub fn erlang(rate: f64, shape: u32) -> Result<Self, DistributionError> {
        if shape == 0 {
            return Err(DistributionError::Shape);
        }
        Ok(Self::Erlang { rate: check_rate(rate)?, shape })
    }

    pub fn hypoexponential(rate1: f64, rate2: f64) -> Result<Self, DistributionError> {
        Ok(Self::Hypoexponential { rate1: check_rate(rate1)?, rate2: check_rate(rate2)? })
    }

    pub fn deterministic(offset: f64) -> Result<Self, DistributionError> {
        if offset.is_finite() && offset >= 0.0 {
            Ok(Self::Deterministic { offset })
        } else {
            Err(DistributionError::Offset(offset))
        }
    }

    /// Exponential law with the given mean.
    pub fn exponential_mean(mean: f64) -> Result<Self, DistributionError> {
        if !(mean.is_finite() && mean > 0.0) {
            return Err(DistributionError::Mean(mean));
        }
        Self::exponential(1.0 / mean)
    }

    /// Re-checks the parameter constraints; useful for values built from the
    /// public variants directly (for example after deserialization).
    pub fn validate(&self) -> Result<(), DistributionError> {
        match *self {
            Self::Exponential { rate } => check_rate(rate).map(|_| ()),
            Self::Erlang { rate, shape } => Self::erlang(rate, shape).map(|_| ()),
            Self::Hypoexponential { rate1, rate2 } => {
                Self::hypoexponential(rate1, rate2).map(|_| ())
            }
            Self::Deterministic { offset } => Self::deterministic(offset).map(|_| ()),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, Self::Deterministic { .. })
    }

    pub fn is_exponential(&self) -> bool {
        matches!(self, Self::Exponential { .. })
    }

    /// Short family tag, matching the JSON `kind` names.
    pub fn family(&self) -> &'static str {
        match self {
            Self::Exponential { .. } => "exp",
            Self::Erlang { .. } => "erlang",
            Self::Hypoexponential { .. } => "hypoexp",
            Self::Deterministic { .. } => "det",
        }
    }

    /// P(T <= t).
    pub fn cdf(&self, t: f64) -> f64 {
        match *self {
            Self::Deterministic { offset } => {
                if t >= offset {
                    1.0
                } else {
                    0.0
                }
            }
            _ if t <= 0.0 => 0.0,
            Self::Exponential { rate } => -(-rate * t).exp_m1(),
            Self::Erlang { rate, shape } => erlang_cdf(rate, shape, t),
            Self::Hypoexponential { rate1, rate2 } => hypo_cdf(rate1, rate2, t),
        }
    }

    /// P(T > t).
    pub fn survival(&self, t: f64) -> f64 {
        match *self {
            Self::Deterministic { offset } => {
                if t >= offset {
                    0.0
                } else {
                    1.0
                }
            }
            _ if t <= 0.0 => 1.0,
            Self::Exponential { rate } => (-rate * t).exp(),
            Self::Erlang { rate, shape } => erlang_survival(rate, shape, t),
            Self::Hypoexponential { rate1, rate2 } => {
                if same_rate(rate1, rate2) {
                    erlang_survival(rate1, 2, t)
                } else {
                    let (a, b) = (rate1, rate2);
                    ((b * (-a * t).exp() - a * (-b * t).exp()) / (b - a)).clamp(0.0, 1.0)
                }
            }
        }
    }

    /// P(T >= t), the left limit of the survival function. Differs from
    /// [`survival`](Self::survival) only at a point mass.
    pub fn survival_left(&self, t: f64) -> f64 {
        match *self {
            Self::Deterministic { offset } => {
                if t > offset {
                    0.0
                } else {
                    1.0
                }
            }
            _ => self.survival(t),
        }
    }

    pub fn density(&self, t: f64) -> Density {
        match *self {
            Self::Deterministic { offset } => Density::PointMass { at: offset },
            _ if t < 0.0 => Density::Continuous(0.0),
            Self::Exponential { rate } => Density::Continuous(rate * (-rate * t).exp()),
            Self::Erlang { rate, shape } => Density::Continuous(erlang_density(rate, shape, t)),
            Self::Hypoexponential { rate1, rate2 } => {
                if same_rate(rate1, rate2) {
                    Density::Continuous(erlang_density(rate1, 2, t))
                } else {
                    let (a, b) = (rate1, rate2);
                    let d = a * b / (b - a) * ((-a * t).exp() - (-b * t).exp());
                    Density::Continuous(d.max(0.0))
                }
            }
        }
    }

    /// Density value for absolutely continuous laws, `None` for a point mass.
    pub fn pdf(&self, t: f64) -> Option<f64> {
        match self.density(t) {
            Density::Continuous(v) => Some(v),
            Density::PointMass { .. } => None,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Exponential { rate } => 1.0 / rate,
            Self::Erlang { rate, shape } => f64::from(shape) / rate,
            Self::Hypoexponential { rate1, rate2 } => 1.0 / rate1 + 1.0 / rate2,
            Self::Deterministic { offset } => offset,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Self::Exponential { rate } => 1.0 / (rate * rate),
            Self::Erlang { rate, shape } => f64::from(shape) / (rate * rate),
            Self::Hypoexponential { rate1, rate2 } => {
                1.0 / (rate1 * rate1) + 1.0 / (rate2 * rate2)
            }
            Self::Deterministic { .. } => 0.0,
        }
    }

    /// Laplace-Stieltjes transform E[exp(-sT)].
    ///
    /// Defined for `s >= 0`; the closed forms also hold for small negative `s`
    /// (above minus the smallest rate), which the central difference
    /// formulas in the completion-time solver rely on.
    pub fn lst(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 1.0;
        }
        match *self {
            Self::Exponential { rate } => rate / (rate + s),
            Self::Erlang { rate, shape } => (rate / (rate + s)).powi(shape as i32),
            Self::Hypoexponential { rate1, rate2 } => rate1 / (rate1 + s) * rate2 / (rate2 + s),
            Self::Deterministic { offset } => (-offset * s).exp(),
        }
    }

    /// d/ds of [`lst`](Self::lst).
    pub fn lst_derivative(&self, s: f64) -> f64 {
        match *self {
            Self::Exponential { rate } => -rate / ((rate + s) * (rate + s)),
            Self::Erlang { rate, shape } => {
                let k = f64::from(shape);
                -k * rate.powi(shape as i32) / (rate + s).powi(shape as i32 + 1)
            }
            Self::Hypoexponential { rate1, rate2 } => {
                let l1 = rate1 / (rate1 + s);
                let l2 = rate2 / (rate2 + s);
                let d1 = -rate1 / ((rate1 + s) * (rate1 + s));
                let d2 = -rate2 / ((rate2 + s) * (rate2 + s));
                d1 * l2 + l1 * d2
            }
            Self::Deterministic { offset } => -offset * (-offset * s).exp(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Exponential { rate } => exp_draw(rate, rng),
            Self::Erlang { rate, shape } => (0..shape).map(|_| exp_draw(rate, rng)).sum(),
            Self::Hypoexponential { rate1, rate2 } => exp_draw(rate1, rng) + exp_draw(rate2, rng),
            Self::Deterministic { offset } => offset,
        }
    }

    /// Smallest `t` with `survival(t) <= eps`. Closed form for exponential
    /// laws, bisection otherwise.
    pub fn truncation_point(&self, eps: f64) -> f64 {
        assert!(eps > 0.0 && eps < 1.0, "tail mass must lie in (0, 1)");
        match *self {
            Self::Deterministic { offset } => offset,
            Self::Exponential { rate } => -eps.ln() / rate,
            _ => {
                let mut hi = self.mean().max(f64::MIN_POSITIVE);
                while self.survival(hi) > eps {
                    hi *= 2.0;
                }
                let mut lo = 0.0;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.survival(mid) > eps {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi
            }
        }
    }

    /// Same family with time stretched by `1/k`: rates are multiplied by `k`
    /// and offsets divided by `k`.
    pub fn time_scaled(&self, k: f64) -> Self {
        match *self {
            Self::Exponential { rate } => Self::Exponential { rate: rate * k },
            Self::Erlang { rate, shape } => Self::Erlang { rate: rate * k, shape },
            Self::Hypoexponential { rate1, rate2 } => {
                Self::Hypoexponential { rate1: rate1 * k, rate2: rate2 * k }
            }
            Self::Deterministic { offset } => Self::Deterministic { offset: offset / k },
        }
    }

    /// Same family rescaled so that its mean becomes `mean`.
    pub fn with_mean(&self, mean: f64) -> Result<Self, DistributionError> {
        if !(mean.is_finite() && mean > 0.0) {
            return Err(DistributionError::Mean(mean));
        }
        match self {
            Self::Deterministic { .. } => Self::deterministic(mean),
            _ => Ok(self.time_scaled(self.mean() / mean)),
        }
    }
}

fn exp_draw<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    Exp::new(rate).expect("validated rate").sample(rng)
}

fn same_rate(a: f64, b: f64) -> bool {
    ((a - b) / a.max(b)).abs() < 1e-9
}

fn ln_factorial(n: u32) -> f64 {
    (1..=n).map(|i| f64::from(i).ln()).sum()
}

fn erlang_density(rate: f64, shape: u32, t: f64) -> f64 {
    if t < 0.0 {
        return 0.0;
    }
    if t == 0.0 {
        return if shape == 1 { rate } else { 0.0 };
    }
    let k = f64::from(shape);
    (k * rate.ln() + (k - 1.0) * t.ln() - rate * t - ln_factorial(shape - 1)).exp()
}

/// Poisson tail P(N >= k) for N ~ Poisson(y), summed directly.
fn poisson_upper(y: f64, k: u32) -> f64 {
    let mut term = (-y + f64::from(k) * y.ln() - ln_factorial(k)).exp();
    let mut sum = 0.0_f64;
    let mut n = k;
    while term > 1e-18 * sum.max(1e-300) {
        sum += term;
        n += 1;
        term *= y / f64::from(n);
        if n > k + 10_000 {
            break;
        }
    }
    sum
}

/// Poisson head P(N < k).
fn poisson_lower(y: f64, k: u32) -> f64 {
    let mut term = (-y).exp();
    let mut sum = 0.0;
    for n in 0..k {
        sum += term;
        term *= y / f64::from(n + 1);
    }
    sum
}

fn erlang_cdf(rate: f64, shape: u32, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let y = rate * t;
    if y < f64::from(shape) {
        poisson_upper(y, shape).min(1.0)
    } else {
        (1.0 - poisson_lower(y, shape)).clamp(0.0, 1.0)
    }
}

fn erlang_survival(rate: f64, shape: u32, t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let y = rate * t;
    if y < f64::from(shape) {
        (1.0 - poisson_upper(y, shape)).clamp(0.0, 1.0)
    } else {
        poisson_lower(y, shape).min(1.0)
    }
}

fn hypo_cdf(a: f64, b: f64, t: f64) -> f64 {
    if same_rate(a, b) {
        return erlang_cdf(a, 2, t);
    }
    // expm1 keeps precision at small t where the cdf behaves like ab t^2 / 2.
    let v = (a * (-b * t).exp_m1() - b * (-a * t).exp_m1()) / (b - a);
    v.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn exponential_cdf_at_mean() {
        let d = Distribution::exponential(0.0010432).unwrap();
        assert!(close(d.cdf(958.58), 1.0 - (-1.0f64).exp(), 1e-5));
    }

    #[test]
    fn negative_time_has_no_mass() {
        for d in [
            Distribution::exponential(2.0).unwrap(),
            Distribution::erlang(2.0, 3).unwrap(),
            Distribution::hypoexponential(1.0, 3.0).unwrap(),
            Distribution::deterministic(4.0).unwrap(),
        ] {
            assert_eq!(d.cdf(-1.0), 0.0);
            assert_eq!(d.survival(-1.0), 1.0);
        }
    }

    #[test]
    fn deterministic_is_a_unit_step() {
        let d = Distribution::deterministic(30.0).unwrap();
        assert_eq!(d.cdf(30.0), 1.0);
        assert_eq!(d.cdf(29.999), 0.0);
        assert_eq!(d.survival_left(30.0), 1.0);
        assert_eq!(d.density(3.0), Density::PointMass { at: 30.0 });
    }

    #[test]
    fn densities_at_origin() {
        assert_eq!(Distribution::exponential(3.5).unwrap().pdf(0.0), Some(3.5));
        assert_eq!(Distribution::erlang(3.5, 2).unwrap().pdf(0.0), Some(0.0));
    }

    #[test]
    fn hypoexponential_density_matches_derivative_of_cdf() {
        let (a, b) = (0.0013674, 0.0043860);
        let d = Distribution::hypoexponential(a, b).unwrap();
        for t in [1.0, 50.0, 400.0, 2000.0] {
            let closed = a * b / (b - a) * ((-a * t).exp() - (-b * t).exp());
            let h = 1e-3;
            let numeric = (d.cdf(t + h) - d.cdf(t - h)) / (2.0 * h);
            let got = d.pdf(t).unwrap();
            assert!(close(got, closed, 1e-15));
            assert!(close(got, numeric, 1e-10));
        }
    }

    #[test]
    fn equal_rate_hypoexponential_is_erlang_two() {
        let h = Distribution::hypoexponential(0.5, 0.5).unwrap();
        let e = Distribution::erlang(0.5, 2).unwrap();
        for t in [0.1, 1.0, 3.0, 10.0] {
            assert!(close(h.cdf(t), e.cdf(t), 1e-15));
            assert!(close(h.pdf(t).unwrap(), e.pdf(t).unwrap(), 1e-15));
        }
    }

    #[test]
    fn default_law_means() {
        let aging = Distribution::erlang(0.0013717, 2).unwrap();
        assert!(close(aging.mean(), 1458.04, 0.01));
        let failure = Distribution::hypoexponential(0.0013674, 0.0043860).unwrap();
        assert!(close(failure.mean(), 959.31, 0.01));
        assert_eq!(Distribution::deterministic(7.5).unwrap().mean(), 7.5);
    }

    #[test]
    fn lst_closed_forms() {
        assert_eq!(Distribution::exponential(12.0).unwrap().lst(12.0), 0.5);
        let d = Distribution::deterministic(30.0 / 3600.0).unwrap();
        assert!(close(d.lst(120.0), (-1.0f64).exp(), 1e-15));
        for d in [
            Distribution::exponential(2.0).unwrap(),
            Distribution::erlang(2.0, 3).unwrap(),
            Distribution::hypoexponential(1.0, 3.0).unwrap(),
            Distribution::deterministic(4.0).unwrap(),
        ] {
            assert_eq!(d.lst(0.0), 1.0);
            assert!(close(-d.lst_derivative(0.0), d.mean(), 1e-9 * d.mean()));
        }
    }

    #[test]
    fn lst_derivative_matches_central_difference() {
        let h = 1e-6;
        for d in [
            Distribution::exponential(0.7).unwrap(),
            Distribution::erlang(1.3, 4).unwrap(),
            Distribution::hypoexponential(0.2, 0.9).unwrap(),
            Distribution::deterministic(2.5).unwrap(),
        ] {
            for s in [0.05, 0.3, 1.0] {
                let fd = (d.lst(s + h) - d.lst(s - h)) / (2.0 * h);
                let exact = d.lst_derivative(s);
                assert!(close(fd, exact, 1e-6 * exact.abs()), "{d:?} at {s}");
            }
        }
    }

    #[test]
    fn truncation_points() {
        let lam = 0.25;
        let d = Distribution::exponential(lam).unwrap();
        assert!(close(d.truncation_point((-20.0f64).exp()), 20.0 / lam, 1e-9));
        assert_eq!(Distribution::deterministic(3.0).unwrap().truncation_point(1e-3), 3.0);
        let h = Distribution::hypoexponential(0.0013674, 0.0043860).unwrap();
        let t = h.truncation_point(1e-12);
        assert!(h.survival(t) <= 1e-12);
        assert!(h.survival(t * (1.0 - 1e-9)) > 1e-12);
    }

    #[test]
    fn deterministic_samples_are_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = Distribution::deterministic(5.0).unwrap();
        assert!((0..100).all(|_| d.sample(&mut rng) == 5.0));
    }

    #[test]
    fn sample_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000;
        let d = Distribution::exponential(0.0006857).unwrap();
        let mean: f64 = (0..n).map(|_| d.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean / 1458.36 - 1.0).abs() < 0.01);

        let d = Distribution::erlang(24.0, 2).unwrap();
        let xs: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
        assert!((var / (2.0 / 576.0) - 1.0).abs() < 0.03);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Distribution::exponential(0.0).is_err());
        assert!(Distribution::erlang(1.0, 0).is_err());
        assert!(Distribution::hypoexponential(1.0, f64::NAN).is_err());
        assert!(Distribution::deterministic(-1.0).is_err());
        assert!(Distribution::Exponential { rate: -2.0 }.validate().is_err());
    }

    #[test]
    fn with_mean_keeps_family() {
        let d = Distribution::erlang(2.0, 2).unwrap().with_mean(0.8).unwrap();
        assert_eq!(d.family(), "erlang");
        assert!(close(d.mean(), 0.8, 1e-15));
    }
}
