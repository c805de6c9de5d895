//! Discrete-event simulation of the host pair, used to cross-check the
//! analytic metrics.
//!
//! Each state samples one delay per armed clock and moves along the
//! earliest; on exact ties the failure clock wins, then the clocks in the
//! order listed. Replication `i` draws from stream `i` of a ChaCha generator
//! keyed by the seed, so results do not depend on scheduling.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::analysis::{RestartRoute, WorkloadSpec};
use crate::distributions::Distribution;
use crate::model::{ModelParams, N_STATES, N_UP};

pub const DEFAULT_GUARD: f64 = 1e9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("CI requires ≥ 2 replications (got {0})")]
    Replications(usize),
    #[error("horizon {horizon} must exceed warmup {warmup} ≥ 0")]
    Horizon { horizon: f64, warmup: f64 },
    #[error("invalid parameters: {}", .0.join("; "))]
    Params(Vec<String>),
    #[error("all {0} replications hit the guard horizon")]
    AllCensored(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub replications: usize,
    pub seed: u64,
    pub availability_horizon: f64,
    pub warmup: f64,
    /// Replications still running at this simulated time are censored.
    pub guard: f64,
}

impl SimConfig {
    pub fn new(replications: usize, seed: u64) -> Self {
        Self { replications, seed, availability_horizon: 1e5, warmup: 1e4, guard: DEFAULT_GUARD }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.replications < 2 {
            return Err(SimError::Replications(self.replications));
        }
        if !(self.warmup >= 0.0 && self.availability_horizon > self.warmup) {
            return Err(SimError::Horizon { horizon: self.availability_horizon, warmup: self.warmup });
        }
        Ok(())
    }

    fn rng(&self, replication: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(replication as u64);
        rng
    }
}

/// Sample mean with a two-sided 95% Student-t interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub metric: String,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub std_error: f64,
    /// Replications that contributed to the mean.
    pub replications: usize,
    /// Replications cut off by the guard horizon and left out of the mean.
    pub censored: usize,
}

impl Estimate {
    pub fn from_samples(metric: &str, samples: &[f64]) -> Self {
        let n = samples.len();
        assert!(n >= 2, "an interval needs at least two samples");
        let nf = n as f64;
        let mean = samples.iter().sum::<f64>() / nf;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
        let std_error = (var / nf).sqrt();
        let t = StudentsT::new(0.0, 1.0, nf - 1.0).expect("n ≥ 2").inverse_cdf(0.975);
        Self {
            metric: metric.to_string(),
            mean,
            ci_low: mean - t * std_error,
            ci_high: mean + t * std_error,
            std_error,
            replications: n,
            censored: 0,
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

/// Draws `Some(delay)` for a clock armed with probability `weight`.
fn armed<R: Rng + ?Sized>(rng: &mut R, d: &Distribution, weight: f64) -> Option<f64> {
    if weight >= 1.0 || rng.random::<f64>() < weight {
        Some(d.sample(rng))
    } else {
        None
    }
}

/// Earliest of the drawn clocks; the first listed wins ties.
fn earliest(clocks: &[(Option<f64>, usize)]) -> (f64, usize) {
    let mut best = (f64::INFINITY, usize::MAX);
    for &(t, target) in clocks {
        if let Some(t) = t {
            if t < best.0 {
                best = (t, target);
            }
        }
    }
    assert!(best.1 != usize::MAX, "some clock must be armed");
    best
}

/// One sojourn: time spent in `state` and the state entered next.
fn step<R: Rng + ?Sized>(p: &ModelParams, state: usize, rng: &mut R) -> (f64, usize) {
    let (pr, bk) = (&p.primary, &p.backup);
    let c = &p.branch;
    let fire = |rng: &mut R, d: &Distribution| Some(d.sample(rng));
    match state {
        // Fresh pair: the primary ages.
        0 => (pr.aging.sample(rng), 8),
        // Primary aging, backup idle: check the backup.
        8 => {
            let fail = fire(rng, &pr.failure_idle);
            let healthy = armed(rng, &p.triggers[0], c.c1);
            let aging = armed(rng, &bk.reboot, c.c2);
            let failed = armed(rng, &bk.fixing, c.c3);
            earliest(&[(fail, 10), (healthy, 2), (aging, 6), (failed, 3)])
        }
        3 => {
            let fail = fire(rng, &pr.failure_reboot);
            let wait = fire(rng, &p.triggers[2]);
            earliest(&[(fail, 10), (wait, 2)])
        }
        6 => {
            let fail = fire(rng, &pr.failure_fixing);
            let wait = fire(rng, &p.triggers[1]);
            earliest(&[(fail, 10), (wait, 2)])
        }
        2 => {
            let fail = fire(rng, &pr.failure_migration);
            let done = fire(rng, &p.migration);
            earliest(&[(fail, 10), (done, 7)])
        }
        // Container on the healthy backup.
        7 => (bk.aging.sample(rng), 1),
        1 => {
            let fail = fire(rng, &bk.failure_idle);
            let healthy = armed(rng, &p.triggers[3], c.c1);
            let aging = armed(rng, &pr.reboot, c.c2);
            let failed = armed(rng, &pr.fixing, c.c3);
            earliest(&[(fail, 11), (healthy, 9), (aging, 4), (failed, 5)])
        }
        4 => {
            let fail = fire(rng, &bk.failure_fixing);
            let wait = fire(rng, &p.triggers[4]);
            earliest(&[(fail, 11), (wait, 9)])
        }
        5 => {
            let fail = fire(rng, &bk.failure_reboot);
            let wait = fire(rng, &p.triggers[5]);
            earliest(&[(fail, 11), (wait, 9)])
        }
        9 => {
            let fail = fire(rng, &bk.failure_migration);
            let done = fire(rng, &p.migration);
            earliest(&[(fail, 11), (done, 0)])
        }
        10 => (pr.fixing.sample(rng), 0),
        11 => (bk.fixing.sample(rng), 7),
        _ => unreachable!("state {state}"),
    }
}

fn checked(p: &ModelParams, c: &SimConfig) -> Result<(), SimError> {
    c.validate()?;
    let v = p.validate();
    if v.is_empty() {
        Ok(())
    } else {
        Err(SimError::Params(v))
    }
}

/// Time spent in each state within `[warmup, horizon]`.
fn occupancy_run(p: &ModelParams, c: &SimConfig, rep: usize) -> [f64; N_STATES] {
    let mut rng = c.rng(rep);
    let mut occ = [0.0; N_STATES];
    let (mut t, mut state) = (0.0, 0);
    while t < c.availability_horizon {
        let (dt, next) = step(p, state, &mut rng);
        let lo = t.max(c.warmup);
        let hi = (t + dt).min(c.availability_horizon);
        if hi > lo {
            occ[state] += hi - lo;
        }
        t += dt;
        state = next;
    }
    occ
}

pub fn simulate_availability(p: &ModelParams, c: &SimConfig) -> Result<Estimate, SimError> {
    checked(p, c)?;
    let span = c.availability_horizon - c.warmup;
    let samples: Vec<f64> = (0..c.replications)
        .into_par_iter()
        .map(|rep| occupancy_run(p, c, rep)[..N_UP].iter().sum::<f64>() / span)
        .collect();
    Ok(Estimate::from_samples("availability", &samples))
}

/// Per-state time fractions, one estimate per state.
pub fn simulate_occupancy(p: &ModelParams, c: &SimConfig) -> Result<Vec<Estimate>, SimError> {
    checked(p, c)?;
    let span = c.availability_horizon - c.warmup;
    let runs: Vec<[f64; N_STATES]> = (0..c.replications).into_par_iter().map(|rep| occupancy_run(p, c, rep)).collect();
    Ok((0..N_STATES)
        .map(|s| {
            let samples: Vec<f64> = runs.iter().map(|r| r[s] / span).collect();
            Estimate::from_samples(&format!("pi_L{s}"), &samples)
        })
        .collect())
}

fn censored_estimate(metric: &str, outcomes: Vec<Option<f64>>) -> Result<Estimate, SimError> {
    let total = outcomes.len();
    let samples: Vec<f64> = outcomes.into_iter().flatten().collect();
    if samples.len() < 2 {
        return Err(SimError::AllCensored(total));
    }
    let mut e = Estimate::from_samples(metric, &samples);
    e.censored = total - samples.len();
    Ok(e)
}

/// Time to the first failure with repair disabled, from the fresh state.
pub fn simulate_mttf(p: &ModelParams, c: &SimConfig) -> Result<Estimate, SimError> {
    checked(p, c)?;
    let outcomes: Vec<Option<f64>> = (0..c.replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = c.rng(rep);
            let (mut t, mut state) = (0.0, 0);
            while state < N_UP {
                if t > c.guard {
                    return None;
                }
                let (dt, next) = step(p, state, &mut rng);
                t += dt;
                state = next;
            }
            Some(t)
        })
        .collect();
    censored_estimate("mttf", outcomes)
}

/// Laws of one execution case, seen from the host the run starts on.
struct Case {
    work: f64,
    trigger: f64,
    pre: Distribution,
    other_reboot: Distribution,
    other_fixing: Distribution,
    after_migration: Distribution,
    after_reboot: Distribution,
    after_fixing: Distribution,
    overhead: Distribution,
    aging: Distribution,
}

impl Case {
    fn primary(p: &ModelParams, w: &WorkloadSpec) -> Self {
        let (pr, bk) = (&p.primary, &p.backup);
        Self {
            work: w.x,
            trigger: p.triggers[0].mean(),
            pre: pr.failure_reboot,
            other_reboot: bk.reboot,
            other_fixing: bk.fixing,
            after_migration: pr.failure_migration,
            after_reboot: pr.failure_fixing,
            after_fixing: pr.failure_reboot,
            overhead: w.restart_overhead_primary.unwrap_or(pr.fixing),
            aging: pr.aging,
        }
    }

    fn backup(p: &ModelParams, w: &WorkloadSpec) -> Self {
        let (pr, bk) = (&p.primary, &p.backup);
        Self {
            work: w.x - w.x1,
            trigger: w.t1.unwrap_or_else(|| p.triggers[3].mean()),
            pre: bk.failure_reboot,
            other_reboot: pr.reboot,
            other_fixing: pr.fixing,
            after_migration: bk.failure_migration,
            after_reboot: bk.failure_fixing,
            after_fixing: bk.failure_reboot,
            overhead: w.restart_overhead_backup.unwrap_or(bk.fixing),
            aging: bk.aging,
        }
    }

    /// One attempt: `Ok(elapsed)` on completion, `Err(elapsed)` on failure,
    /// restart overhead included.
    fn attempt<R: Rng + ?Sized>(&self, p: &ModelParams, w: &WorkloadSpec, rng: &mut R) -> Result<f64, f64> {
        let slow = self.trigger.min(self.work).max(0.0);
        let window = slow / w.r1;
        let rest = (self.work - slow) / w.r2;
        let restart = |rng: &mut R, at: f64| at + self.overhead.sample(rng) + self.aging.sample(rng);
        let f = self.pre.sample(rng);
        if f <= window {
            return Err(restart(rng, f));
        }
        let c = &p.branch;
        let u: f64 = rng.random();
        let law = if u < c.c1 {
            self.after_migration
        } else if u < c.c1 + c.c2 {
            if self.other_reboot.sample(rng) <= window {
                self.after_reboot
            } else {
                self.after_migration
            }
        } else if self.other_fixing.sample(rng) <= window {
            self.after_fixing
        } else {
            self.after_migration
        };
        let g = law.sample(rng);
        if g <= rest {
            Err(restart(rng, window + g))
        } else {
            Ok(window + rest)
        }
    }
}

/// Wall-clock completion time under preemptive-repeat restarts.
pub fn simulate_completion(p: &ModelParams, w: &WorkloadSpec, c: &SimConfig) -> Result<Estimate, SimError> {
    checked(p, c)?;
    let v = w.validate();
    if !v.is_empty() {
        return Err(SimError::Params(v));
    }
    let (primary, backup) = (Case::primary(p, w), Case::backup(p, w));
    let outcomes: Vec<Option<f64>> = (0..c.replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = c.rng(rep);
            let mut case = if rng.random::<f64>() < w.b1 { &primary } else { &backup };
            let mut t = 0.0;
            loop {
                if t > c.guard {
                    return None;
                }
                match case.attempt(p, w, &mut rng) {
                    Ok(dt) => return Some(t + dt),
                    Err(dt) => {
                        t += dt;
                        if std::ptr::eq(case, &backup) && w.restart_route == RestartRoute::Primary {
                            case = &primary;
                        }
                    }
                }
            }
        })
        .collect();
    censored_estimate("completion", outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn never() -> Distribution {
        Distribution::Deterministic { offset: 1e12 }
    }

    #[test]
    fn interval_matches_t_quantile() {
        let e = Estimate::from_samples("x", &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        let se = (5.0f64 / 3.0 / 4.0).sqrt();
        assert!((e.half_width() - 3.182446305284263 * se).abs() < 1e-9);
        assert!(e.ci_low <= e.mean && e.mean <= e.ci_high);
    }

    #[test]
    fn rejects_single_replication() {
        let p = ModelParams::exponential_defaults(30.0);
        let err = simulate_availability(&p, &SimConfig::new(1, 0)).unwrap_err();
        assert!(err.to_string().contains("CI requires ≥ 2 replications"));
    }

    #[test]
    fn no_failures_means_full_availability() {
        let mut p = ModelParams::exponential_defaults(30.0);
        p.primary.set_failure(never());
        p.backup.set_failure(never());
        let mut c = SimConfig::new(8, 3);
        c.availability_horizon = 2e4;
        c.warmup = 1e3;
        let e = simulate_availability(&p, &c).unwrap();
        assert_eq!(e.mean, 1.0);
        assert_eq!(e.ci_low, 1.0);
    }

    #[test]
    fn deterministic_failure_path() {
        let mut p = ModelParams::exponential_defaults(30.0);
        p.primary.aging = Distribution::Deterministic { offset: 2.0 };
        p.primary.failure_idle = Distribution::Deterministic { offset: 10.0 };
        p.branch = crate::model::Branch { c1: 1.0, c2: 0.0, c3: 0.0 };
        p.set_all_triggers(50.0);
        let e = simulate_mttf(&p, &SimConfig::new(10, 9)).unwrap();
        assert_eq!(e.mean, 12.0);
        assert_eq!(e.half_width(), 0.0);
    }

    #[test]
    fn no_failure_completion_is_nominal() {
        let mut p = ModelParams::exponential_defaults(40.0);
        p.primary.set_failure(never());
        p.backup.set_failure(never());
        let w = WorkloadSpec::new(100.0, 0.5);
        let e = simulate_completion(&p, &w, &SimConfig::new(5, 1)).unwrap();
        assert_eq!(e.mean, 40.0 / 0.5 + 60.0);
    }

    #[test]
    fn seeded_runs_repeat() {
        let p = ModelParams::hypo_failure_defaults(30.0);
        let mut c = SimConfig::new(16, 42);
        c.availability_horizon = 2e4;
        c.warmup = 1e3;
        assert_eq!(simulate_availability(&p, &c).unwrap(), simulate_availability(&p, &c).unwrap());
        assert_eq!(simulate_mttf(&p, &c).unwrap(), simulate_mttf(&p, &c).unwrap());
        c.seed = 43;
        let other = simulate_mttf(&p, &c).unwrap();
        c.seed = 42;
        assert_ne!(other, simulate_mttf(&p, &c).unwrap());
    }
}
