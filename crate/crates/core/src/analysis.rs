//! Steady-state availability, MTTF and mean completion time.

pub mod ctmc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::Distribution;
use crate::model::{ModelError, ModelParams, SojournVector, Tpm, N_STATES, N_UP};
use crate::numerics::{self, NumericsError, Vector};

/// Tolerance on `Φ(0) = 1`.
pub const MASS_TOL: f64 = 1e-9;
/// Finite-difference steps in the dimensionless variable `s·τ`.
pub const FD_STEPS: (f64, f64) = (1e-4, 5e-5);
const WINDOW_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("invalid workload: {}", .0.join("; "))]
    Workload(Vec<String>),
    #[error("{stage} restart loop does not terminate (B(s) = {b} at s = {s})")]
    Divergence { stage: &'static str, s: f64, b: f64 },
    #[error("{stage} execution can never complete")]
    NeverCompletes { stage: &'static str },
    #[error("{stage} completion transform at s = 0 is {value}, expected 1")]
    MassConservation { stage: &'static str, value: f64 },
}

/// Which transform the backup-case restart terms feed back into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RestartRoute {
    /// A failed backup-case run restarts as a primary-case run.
    #[default]
    Primary,
    /// A failed backup-case run restarts as a backup-case run.
    Backup,
}

/// Completion-time inputs.
///
/// Work is measured in hours of healthy-rate execution. The first
/// `min(a, x)` units (with `a` the relevant trigger) run at rate `r1`, the
/// rest at `r2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub x: f64,
    pub x1: f64,
    pub r1: f64,
    pub r2: f64,
    pub b1: f64,
    pub b2: f64,
    /// Backup-side trigger epoch; `None` uses `a4`.
    pub t1: Option<f64>,
    /// Restart overhead on the primary side; `None` uses the primary fixing law.
    pub restart_overhead_primary: Option<Distribution>,
    /// Restart overhead on the backup side; `None` uses the backup fixing law.
    pub restart_overhead_backup: Option<Distribution>,
    pub restart_route: RestartRoute,
}

impl WorkloadSpec {
    /// Primary-case workload with `x1 = x/2` and the other inputs at their
    /// defaults.
    pub fn new(x: f64, r1: f64) -> Self {
        Self {
            x,
            x1: 0.5 * x,
            r1,
            r2: 1.0,
            b1: 1.0,
            b2: 0.0,
            t1: None,
            restart_overhead_primary: None,
            restart_overhead_backup: None,
            restart_route: RestartRoute::Primary,
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.x.is_finite() && self.x > 0.0) {
            out.push(format!("x = {} must be positive", self.x));
        }
        if !(0.0..=self.x).contains(&self.x1) {
            out.push(format!("x1 = {} must lie in [0, x]", self.x1));
        }
        if !(self.r1 > 0.0 && self.r1 <= 1.0) {
            out.push(format!("r1 = {} must lie in (0, 1]", self.r1));
        }
        if self.r2 != 1.0 {
            out.push(format!("r2 = {} must be 1", self.r2));
        }
        if !(0.0..=1.0).contains(&self.b1) || !(0.0..=1.0).contains(&self.b2) || (self.b1 + self.b2 - 1.0).abs() > 1e-12 {
            out.push(format!("b1 = {}, b2 = {} must be probabilities summing to 1", self.b1, self.b2));
        }
        if let Some(t1) = self.t1 {
            if !(t1.is_finite() && t1 >= 0.0) {
                out.push(format!("t1 = {t1} must be non-negative"));
            }
        }
        for (name, d) in [("primary", self.restart_overhead_primary), ("backup", self.restart_overhead_backup)] {
            if let Some(Err(e)) = d.map(|d| d.validate()) {
                out.push(format!("restart_overhead_{name}: {e}"));
            }
        }
        out
    }

    /// Same workload on a time axis stretched by `1/k`.
    pub fn time_scaled(&self, k: f64) -> Self {
        Self {
            x: self.x / k,
            x1: self.x1 / k,
            t1: self.t1.map(|t| t / k),
            restart_overhead_primary: self.restart_overhead_primary.map(|d| d.time_scaled(k)),
            restart_overhead_backup: self.restart_overhead_backup.map(|d| d.time_scaled(k)),
            ..*self
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub availability: f64,
    pub mttf: f64,
    pub completion_time: Option<f64>,
    /// Steady-state probability of each of the twelve states.
    pub pi: Vec<f64>,
    /// Expected visits to the up states before the first failure.
    pub visits: Vec<f64>,
    pub tpm: Tpm,
    pub sojourn: SojournVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub tpm: Tpm,
    pub sojourn: SojournVector,
    /// Embedded-chain stationary vector.
    pub v: Vector,
    pub pi: Vector,
}

impl SteadyState {
    pub fn availability(&self) -> f64 {
        1.0 - self.pi.rows(N_UP, N_STATES - N_UP).sum()
    }
}

pub fn steady_state(p: &ModelParams) -> Result<SteadyState, AnalysisError> {
    steady_state_from(p.transition_matrix()?, p.sojourn_times()?)
}

/// Steady state of an already assembled chain.
pub fn steady_state_from(tpm: Tpm, sojourn: SojournVector) -> Result<SteadyState, AnalysisError> {
    let v = numerics::dtmc_stationary(&tpm.0)?;
    let weighted = v.component_mul(&sojourn.0);
    let pi = &weighted / weighted.sum();
    Ok(SteadyState { tpm, sojourn, v, pi })
}

/// Expected visits before the first failure for an assembled chain.
pub fn visits_from(tpm: &Tpm) -> Result<Vector, AnalysisError> {
    let m = tpm.0.view((0, 0), (N_UP, N_UP)).into_owned();
    let mut alpha = Vector::zeros(N_UP);
    alpha[0] = 1.0;
    Ok(numerics::absorbing_visits(&m, &alpha)?)
}

pub fn availability(p: &ModelParams) -> Result<f64, AnalysisError> {
    Ok(steady_state(p)?.availability())
}

/// Expected visits to each up state before the first failure, starting in L0.
pub fn expected_visits(p: &ModelParams) -> Result<Vector, AnalysisError> {
    let blocks = p.absorbing_blocks()?;
    Ok(numerics::absorbing_visits(&blocks.m, &blocks.alpha)?)
}

pub fn mttf(p: &ModelParams) -> Result<f64, AnalysisError> {
    let visits = expected_visits(p)?;
    let h = p.sojourn_times()?;
    Ok(visits.dot(&h.0.rows(0, N_UP)))
}

/// Availability, MTTF and (when a workload is given) completion time.
pub fn analyze(p: &ModelParams, workload: Option<&WorkloadSpec>) -> Result<MetricsReport, AnalysisError> {
    let completion_time = workload.map(|w| completion_time(p, w)).transpose()?;
    report_from(p.transition_matrix()?, p.sojourn_times()?, completion_time)
}

/// Chain metrics for an assembled (possibly edited) transition matrix.
pub fn report_from(
    tpm: Tpm,
    sojourn: SojournVector,
    completion_time: Option<f64>,
) -> Result<MetricsReport, AnalysisError> {
    let visits = visits_from(&tpm)?;
    let ss = steady_state_from(tpm, sojourn)?;
    let mttf = visits.dot(&ss.sojourn.0.rows(0, N_UP));
    Ok(MetricsReport {
        availability: ss.availability(),
        mttf,
        completion_time,
        pi: ss.pi.iter().copied().collect(),
        visits: visits.iter().copied().collect(),
        tpm: ss.tpm,
        sojourn: ss.sojourn,
    })
}

/// One execution case (primary or backup start) of the completion-time
/// model, with all windows resolved.
#[derive(Debug, Clone, Copy)]
struct Stage {
    name: &'static str,
    /// Time at the slowed rate, before migration.
    w: f64,
    /// Time after migration.
    d: f64,
    /// Failure law while running before migration.
    pre: Distribution,
    /// Post-migration failure laws with the probability of each.
    post: [(f64, Distribution); 3],
    overhead: Distribution,
    aging: Distribution,
}

/// `A + B − 1` computed without cancellation, and `B`.
#[derive(Debug, Clone, Copy)]
struct StageValue {
    excess: f64,
    b: f64,
}

impl Stage {
    fn primary(p: &ModelParams, wl: &WorkloadSpec) -> Self {
        let (pr, bk) = (&p.primary, &p.backup);
        Self::build(
            "primary",
            wl.x,
            p.trigger(1),
            wl,
            pr.failure_reboot,
            [
                (bk.reboot, pr.failure_fixing, p.branch.c2),
                (bk.fixing, pr.failure_reboot, p.branch.c3),
            ],
            pr.failure_migration,
            wl.restart_overhead_primary.unwrap_or(pr.fixing),
            pr.aging,
        )
    }

    fn backup(p: &ModelParams, wl: &WorkloadSpec) -> Self {
        let (pr, bk) = (&p.primary, &p.backup);
        Self::build(
            "backup",
            wl.x - wl.x1,
            wl.t1.unwrap_or_else(|| p.trigger(4)),
            wl,
            bk.failure_reboot,
            [
                (pr.reboot, bk.failure_fixing, p.branch.c2),
                (pr.fixing, bk.failure_reboot, p.branch.c3),
            ],
            bk.failure_migration,
            wl.restart_overhead_backup.unwrap_or(bk.fixing),
            bk.aging,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        name: &'static str,
        work: f64,
        trigger: f64,
        wl: &WorkloadSpec,
        pre: Distribution,
        checked: [(Distribution, Distribution, f64); 2],
        default_post: Distribution,
        overhead: Distribution,
        aging: Distribution,
    ) -> Self {
        let slow = trigger.min(work).max(0.0);
        let w = slow / wl.r1;
        let d = (work - slow) / wl.r2;
        let q2 = checked[0].2 * checked[0].0.cdf(w);
        let q3 = checked[1].2 * checked[1].0.cdf(w);
        let q1 = (1.0 - q2 - q3).max(0.0);
        Self {
            name,
            w,
            d,
            pre,
            post: [(q1, default_post), (q2, checked[0].1), (q3, checked[1].1)],
            overhead,
            aging,
        }
    }

    fn tau(&self) -> f64 {
        self.w + self.d
    }

    /// Probability of finishing without a failure.
    fn success(&self) -> f64 {
        self.pre.survival(self.w) * self.post.iter().map(|(q, f)| q * f.survival(self.d)).sum::<f64>()
    }

    /// Probability of failing before finishing, summed from the failure side.
    fn failure(&self) -> f64 {
        self.pre.cdf(self.w) + self.pre.survival(self.w) * self.post.iter().map(|(q, f)| q * f.cdf(self.d)).sum::<f64>()
    }

    /// `∫ g(t) dP(fail at wall-clock t)` over the execution windows.
    fn failure_integral<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64, NumericsError> {
        let mut total = numerics::stieltjes_upto(&g, &self.pre, self.w, &[], WINDOW_TOL)?;
        let reach = self.pre.survival(self.w);
        if reach > 0.0 {
            for (q, f) in &self.post {
                if *q > 0.0 {
                    total += reach * q * numerics::stieltjes_upto(|u| g(self.w + u), f, self.d, &[], WINDOW_TOL)?;
                }
            }
        }
        Ok(total)
    }

    fn restart_lst(&self, s: f64) -> f64 {
        self.overhead.lst(s) * self.aging.lst(s)
    }

    fn eval(&self, s: f64) -> Result<StageValue, AnalysisError> {
        let j = self.failure_integral(|t| (-s * t).exp())?;
        let b = self.restart_lst(s) * j;
        let excess = (-s * self.tau()).exp_m1() * self.success() + (b - self.failure());
        Ok(StageValue { excess, b })
    }

    /// `A'(0)` and `B'(0)` from the component transforms.
    fn derivatives_at_zero(&self) -> Result<(f64, f64, f64), AnalysisError> {
        let a_prime = -self.tau() * self.success();
        let j0 = self.failure_integral(|_| 1.0)?;
        let j_prime = -self.failure_integral(|t| t)?;
        let restart_prime = self.overhead.lst_derivative(0.0) * self.aging.lst(0.0)
            + self.overhead.lst(0.0) * self.aging.lst_derivative(0.0);
        let b0 = self.restart_lst(0.0) * j0;
        let b_prime = restart_prime * j0 + self.restart_lst(0.0) * j_prime;
        Ok((a_prime, b_prime, b0))
    }

    fn check_terminates(&self, value: &StageValue, s: f64) -> Result<(), AnalysisError> {
        if self.success() <= 0.0 {
            return Err(AnalysisError::NeverCompletes { stage: self.name });
        }
        if value.b.is_nan() || value.b >= 1.0 {
            return Err(AnalysisError::Divergence { stage: self.name, s, b: value.b });
        }
        Ok(())
    }
}

/// Both completion transforms, each returned as `Φ(s) − 1`.
struct Completion {
    primary: Stage,
    backup: Stage,
    route: RestartRoute,
    b: (f64, f64),
}

impl Completion {
    fn new(p: &ModelParams, wl: &WorkloadSpec) -> Result<Self, AnalysisError> {
        let v = p.validate();
        if !v.is_empty() {
            return Err(ModelError::Invalid(v).into());
        }
        let v = wl.validate();
        if !v.is_empty() {
            return Err(AnalysisError::Workload(v));
        }
        Ok(Self {
            primary: Stage::primary(p, wl),
            backup: Stage::backup(p, wl),
            route: wl.restart_route,
            b: (wl.b1, wl.b2),
        })
    }

    /// `(Φ1(s) − 1, Φ2(s) − 1)` from the joint linear system
    /// `Φ1 = A1 + B1 Φ1`, `Φ2 = A2 + B2 Φ_route`.
    fn deviations(&self, s: f64) -> Result<(f64, f64), AnalysisError> {
        let v1 = self.primary.eval(s)?;
        self.primary.check_terminates(&v1, s)?;
        let d1 = v1.excess / (1.0 - v1.b);
        let v2 = self.backup.eval(s)?;
        let d2 = match self.route {
            RestartRoute::Primary => v2.excess + v2.b * d1,
            RestartRoute::Backup => {
                self.backup.check_terminates(&v2, s)?;
                v2.excess / (1.0 - v2.b)
            }
        };
        Ok((d1, d2))
    }

    fn check_mass(&self) -> Result<(), AnalysisError> {
        let (d1, d2) = self.deviations(0.0)?;
        for (stage, d) in [(self.primary.name, d1), (self.backup.name, d2)] {
            if d.is_nan() || d.abs() > MASS_TOL {
                return Err(AnalysisError::MassConservation { stage, value: 1.0 + d });
            }
        }
        Ok(())
    }

    /// Time scale of the dimensionless transform variable.
    fn tau_ref(&self) -> f64 {
        self.primary.tau()
    }

    /// `(E1, E2)` by fourth-order central differences with one Richardson step.
    fn means_fd(&self) -> Result<(f64, f64), AnalysisError> {
        let tau = self.tau_ref();
        let central = |h: f64| -> Result<(f64, f64), AnalysisError> {
            let at = |k: f64| self.deviations(k * h / tau);
            let (p2, p1, m1, m2) = (at(2.0)?, at(1.0)?, at(-1.0)?, at(-2.0)?);
            let d = |f: fn(&(f64, f64)) -> f64| (-f(&p2) + 8.0 * f(&p1) - 8.0 * f(&m1) + f(&m2)) / (12.0 * h);
            Ok((d(|v| v.0), d(|v| v.1)))
        };
        let coarse = central(FD_STEPS.0)?;
        let fine = central(FD_STEPS.1)?;
        let rich = |c: f64, f: f64| (16.0 * f - c) / 15.0;
        Ok((-tau * rich(coarse.0, fine.0), -tau * rich(coarse.1, fine.1)))
    }

    /// `(E1, E2)` from analytically differentiated components.
    fn means_analytic(&self) -> Result<(f64, f64), AnalysisError> {
        let (a1, b1, b10) = self.primary.derivatives_at_zero()?;
        let phi1 = (a1 + b1) / (1.0 - b10);
        let (a2, b2, b20) = self.backup.derivatives_at_zero()?;
        let phi2 = match self.route {
            RestartRoute::Primary => a2 + b2 + b20 * phi1,
            RestartRoute::Backup => (a2 + b2) / (1.0 - b20),
        };
        Ok((-phi1, -phi2))
    }

    fn combine(&self, e: (f64, f64)) -> f64 {
        let (b1, b2) = self.b;
        let mut total = 0.0;
        if b1 > 0.0 {
            total += b1 * e.0;
        }
        if b2 > 0.0 {
            total += b2 * e.1;
        }
        total
    }
}

/// `Φ_p1(s)`: LST of the completion time of a run that starts on the primary.
pub fn completion_lst_primary(p: &ModelParams, w: &WorkloadSpec, s: f64) -> Result<f64, AnalysisError> {
    Ok(1.0 + Completion::new(p, w)?.deviations(s)?.0)
}

/// `Φ_p2(s)`: LST of the completion time of a run that starts on the backup.
pub fn completion_lst_backup(p: &ModelParams, w: &WorkloadSpec, s: f64) -> Result<f64, AnalysisError> {
    Ok(1.0 + Completion::new(p, w)?.deviations(s)?.1)
}

/// Mean completion times of the primary and backup cases.
pub fn completion_means(p: &ModelParams, w: &WorkloadSpec) -> Result<(f64, f64), AnalysisError> {
    let c = Completion::new(p, w)?;
    c.check_mass()?;
    c.means_fd()
}

/// Same as [`completion_means`], from derivatives of the component transforms.
pub fn completion_means_analytic(p: &ModelParams, w: &WorkloadSpec) -> Result<(f64, f64), AnalysisError> {
    let c = Completion::new(p, w)?;
    c.check_mass()?;
    c.means_analytic()
}

/// Mean completion time `b1·E1 + b2·E2`.
pub fn completion_time(p: &ModelParams, w: &WorkloadSpec) -> Result<f64, AnalysisError> {
    let c = Completion::new(p, w)?;
    c.check_mass()?;
    Ok(c.combine(c.means_fd()?))
}

pub fn completion_time_analytic(p: &ModelParams, w: &WorkloadSpec) -> Result<f64, AnalysisError> {
    let c = Completion::new(p, w)?;
    c.check_mass()?;
    Ok(c.combine(c.means_analytic()?))
}

/// Failure-free completion time of the primary case.
pub fn nominal_completion(p: &ModelParams, w: &WorkloadSpec) -> f64 {
    let slow = p.trigger(1).min(w.x).max(0.0);
    slow / w.r1 + (w.x - slow) / w.r2
}

/// Index helpers for callers that label π.
pub fn state_labels() -> Vec<String> {
    (0..N_STATES).map(|i| format!("L{i}")).collect()
}
