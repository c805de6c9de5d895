//! The container-aging semi-Markov model: twelve system states, the
//! competing events active in each, and the embedded-chain quantities built
//! from them (one-step transition matrix, mean sojourn times and the
//! absorbing partition used for MTTF).

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::Distribution;
use crate::numerics::{self, Matrix, NumericsError, Vector, QUAD_TOL, TAIL_MASS};

pub const N_STATES: usize = 12;
/// States `0..N_UP` are up; the last two are the failed states.
pub const N_UP: usize = 10;

/// Tolerance on explicitly integrated row sums of the transition matrix.
pub const ROW_SUM_TOL: f64 = 1e-8;

/// Condition of one host OS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HostCondition {
    Healthy,
    Idle,
    Aging,
    Migration,
    Fixing,
    Reboot,
    Failed,
}

impl HostCondition {
    pub fn letter(self) -> char {
        match self {
            Self::Healthy => 'H',
            Self::Idle => 'I',
            Self::Aging => 'A',
            Self::Migration => 'M',
            Self::Fixing => 'S',
            Self::Reboot => 'R',
            Self::Failed => 'F',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SystemState {
    pub index: usize,
    pub primary: HostCondition,
    pub backup: HostCondition,
}

impl SystemState {
    pub fn available(&self) -> bool {
        self.primary != HostCondition::Failed && self.backup != HostCondition::Failed
    }

    pub fn label(&self) -> String {
        format!("L{}", self.index)
    }
}

impl fmt::Display for SystemState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}=({},{})", self.index, self.primary.letter(), self.backup.letter())
    }
}

const fn st(index: usize, primary: HostCondition, backup: HostCondition) -> SystemState {
    SystemState { index, primary, backup }
}

use HostCondition::*;

pub const STATES: [SystemState; N_STATES] = [
    st(0, Healthy, Idle),
    st(1, Idle, Aging),
    st(2, Migration, Idle),
    st(3, Aging, Reboot),
    st(4, Fixing, Aging),
    st(5, Reboot, Aging),
    st(6, Aging, Fixing),
    st(7, Idle, Healthy),
    st(8, Aging, Idle),
    st(9, Idle, Migration),
    st(10, Failed, Idle),
    st(11, Idle, Failed),
];

/// Non-null kernel entries (`from`, `to`).
pub const KERNEL_ENTRIES: [(usize, usize); 24] = [
    (0, 8),
    (1, 4),
    (1, 5),
    (1, 9),
    (1, 11),
    (2, 7),
    (2, 10),
    (3, 2),
    (3, 10),
    (4, 9),
    (4, 11),
    (5, 9),
    (5, 11),
    (6, 2),
    (6, 10),
    (7, 1),
    (8, 2),
    (8, 3),
    (8, 6),
    (8, 10),
    (9, 0),
    (9, 11),
    (10, 0),
    (11, 7),
];

pub fn kernel_entry_allowed(from: usize, to: usize) -> bool {
    KERNEL_ENTRIES.contains(&(from, to))
}

/// Parses `"L7"` (or `"7"`) into a state index.
pub fn parse_state(label: &str) -> Option<usize> {
    let digits = label.strip_prefix('L').unwrap_or(label);
    digits.parse().ok().filter(|&i| i < N_STATES)
}

/// Lifetime laws attached to one host.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HostLaws {
    /// Healthy to aging.
    pub aging: Distribution,
    /// Aging to failed while the other host is idle.
    pub failure_idle: Distribution,
    /// Aging to failed while a migration is in progress.
    pub failure_migration: Distribution,
    /// Aging to failed while the other host is being fixed.
    pub failure_fixing: Distribution,
    /// Aging to failed while the other host reboots.
    pub failure_reboot: Distribution,
    /// Failed to healthy.
    pub fixing: Distribution,
    /// Reboot after aging.
    pub reboot: Distribution,
}

impl HostLaws {
    /// One failure law for all four failure contexts.
    pub fn new(aging: Distribution, failure: Distribution, fixing: Distribution, reboot: Distribution) -> Self {
        Self {
            aging,
            failure_idle: failure,
            failure_migration: failure,
            failure_fixing: failure,
            failure_reboot: failure,
            fixing,
            reboot,
        }
    }

    pub fn set_failure(&mut self, failure: Distribution) {
        self.failure_idle = failure;
        self.failure_migration = failure;
        self.failure_fixing = failure;
        self.failure_reboot = failure;
    }

    fn laws(&self) -> [(&'static str, &Distribution); 7] {
        [
            ("aging", &self.aging),
            ("failure_idle", &self.failure_idle),
            ("failure_migration", &self.failure_migration),
            ("failure_fixing", &self.failure_fixing),
            ("failure_reboot", &self.failure_reboot),
            ("fixing", &self.fixing),
            ("reboot", &self.reboot),
        ]
    }

    fn laws_mut(&mut self) -> [&mut Distribution; 7] {
        [
            &mut self.aging,
            &mut self.failure_idle,
            &mut self.failure_migration,
            &mut self.failure_fixing,
            &mut self.failure_reboot,
            &mut self.fixing,
            &mut self.reboot,
        ]
    }
}

/// Probabilities describing the other host when aging is detected: healthy
/// (`c1`), aging (`c2`) or failed (`c3`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Branch {
    /// Least-squares fit to the reference availability curve (see
    /// the README for the procedure).
    pub const FITTED: Branch = Branch { c1: 0.58422, c2: 0.31998, c3: 0.09580 };

    pub fn sum(&self) -> f64 {
        self.c1 + self.c2 + self.c3
    }
}

/// Full parameter set of the model.
///
/// `triggers[i]` is the law of the trigger variable `T_{i+1}`; normally a
/// deterministic offset `a_{i+1}`. Triggers 1-3 act on the primary side,
/// 4-6 on the backup side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub primary: HostLaws,
    pub backup: HostLaws,
    pub migration: Distribution,
    pub triggers: [Distribution; 6],
    pub branch: Branch,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameters: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("row {row} of the transition matrix sums to {sum} before closure")]
    RowSum { row: String, sum: f64 },
    #[error("state {0} has no event that fires with certainty; its sojourn is unbounded")]
    UnboundedSojourn(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// One competing event of a state: a clock that is armed with probability
/// `weight` and, when armed, fires after a `law`-distributed delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub law: Distribution,
    pub weight: f64,
    pub target: usize,
    /// Entry obtained as one minus its row siblings.
    pub closes_row: bool,
}

impl Event {
    fn new(law: Distribution, target: usize) -> Self {
        Self { law, weight: 1.0, target, closes_row: false }
    }

    fn weighted(law: Distribution, weight: f64, target: usize) -> Self {
        Self { law, weight, target, closes_row: false }
    }

    fn closing(mut self) -> Self {
        self.closes_row = true;
        self
    }

    /// P(clock has fired by `t`).
    fn fired(&self, t: f64) -> f64 {
        self.weight * self.law.cdf(t)
    }

    /// P(clock has fired strictly before `t`).
    fn fired_before(&self, t: f64) -> f64 {
        self.weight * (1.0 - self.law.survival_left(t))
    }
}

impl ModelParams {
    /// All-exponential default laws, every trigger at `trigger` hours and the
    /// fitted branch probabilities.
    pub fn exponential_defaults(trigger: f64) -> Self {
        let host = HostLaws::new(
            Distribution::Exponential { rate: 0.0006857 },
            Distribution::Exponential { rate: 0.0010432 },
            Distribution::Exponential { rate: 1.0 },
            Distribution::Exponential { rate: 12.0 },
        );
        Self {
            primary: host,
            backup: host,
            migration: Distribution::Exponential { rate: 120.5 },
            triggers: [Distribution::Deterministic { offset: trigger }; 6],
            branch: Branch::FITTED,
        }
    }

    /// Reference validation setting: hypoexponential failure times,
    /// everything else exponential.
    pub fn hypo_failure_defaults(trigger: f64) -> Self {
        let mut p = Self::exponential_defaults(trigger);
        let f = Distribution::Hypoexponential { rate1: 0.0013674, rate2: 0.0043860 };
        p.primary.set_failure(f);
        p.backup.set_failure(f);
        p
    }

    /// Sets every trigger to a deterministic delay.
    pub fn set_all_triggers(&mut self, hours: f64) {
        self.triggers = [Distribution::Deterministic { offset: hours }; 6];
    }

    pub fn set_primary_triggers(&mut self, hours: f64) {
        for t in &mut self.triggers[..3] {
            *t = Distribution::Deterministic { offset: hours };
        }
    }

    pub fn set_backup_triggers(&mut self, hours: f64) {
        for t in &mut self.triggers[3..] {
            *t = Distribution::Deterministic { offset: hours };
        }
    }

    /// Mean delay of trigger `i` (1-based, as in `a1`..`a6`).
    pub fn trigger(&self, i: usize) -> f64 {
        self.triggers[i - 1].mean()
    }

    /// Rescales both fixing laws to the given mean, keeping their families.
    pub fn set_fixing_mean(&mut self, mean: f64) -> Result<(), ModelError> {
        for h in [&mut self.primary, &mut self.backup] {
            h.fixing = h.fixing.with_mean(mean).map_err(|e| ModelError::Invalid(vec![e.to_string()]))?;
        }
        Ok(())
    }

    pub fn all_laws(&self) -> Vec<(String, Distribution)> {
        let mut out = Vec::new();
        for (side, host) in [("primary", &self.primary), ("backup", &self.backup)] {
            for (name, d) in host.laws() {
                out.push((format!("{side}.{name}"), *d));
            }
        }
        out.push(("migration".into(), self.migration));
        for (i, t) in self.triggers.iter().enumerate() {
            out.push((format!("trigger.a{}", i + 1), *t));
        }
        out
    }

    /// True when every law, triggers included, is exponential.
    pub fn all_exponential(&self) -> bool {
        self.all_laws().iter().all(|(_, d)| d.is_exponential())
    }

    /// Same model on a time axis stretched by `1/k`.
    pub fn time_scaled(&self, k: f64) -> Self {
        let mut p = *self;
        for host in [&mut p.primary, &mut p.backup] {
            for d in host.laws_mut() {
                *d = d.time_scaled(k);
            }
        }
        p.migration = p.migration.time_scaled(k);
        for t in &mut p.triggers {
            *t = t.time_scaled(k);
        }
        p
    }

    /// Every invariant violation, without stopping at the first.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, d) in self.all_laws() {
            if let Err(e) = d.validate() {
                if let (true, Distribution::Deterministic { offset }) = (name.starts_with("trigger"), d) {
                    if offset < 0.0 {
                        out.push(format!("{name}: trigger offset negative ({offset})"));
                        continue;
                    }
                }
                out.push(format!("{name}: {e}"));
            }
        }
        let Branch { c1, c2, c3 } = self.branch;
        for (name, c) in [("c1", c1), ("c2", c2), ("c3", c3)] {
            if !(0.0..=1.0).contains(&c) {
                out.push(format!("{name} = {c} is not a probability"));
            }
        }
        let sum = self.branch.sum();
        if (sum - 1.0).abs() > 1e-12 || !sum.is_finite() {
            out.push(format!("c1+c2+c3 = {sum} ≠ 1"));
        }
        out
    }

    fn checked(&self) -> Result<(), ModelError> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(ModelError::Invalid(v))
        }
    }

    /// Competing events of `state`, in tie-breaking priority order (failures
    /// first).
    pub fn events(&self, state: usize) -> Vec<Event> {
        let (p, b) = (&self.primary, &self.backup);
        let Branch { c1, c2, c3 } = self.branch;
        let trig = |i: usize| self.triggers[i - 1];
        match state {
            0 => vec![Event::new(p.aging, 8)],
            // Container on the aging backup; the primary is checked.
            1 => vec![
                Event::new(b.failure_idle, 11),
                Event::weighted(trig(4), c1, 9).closing(),
                Event::weighted(p.reboot, c2, 4),
                Event::weighted(p.fixing, c3, 5),
            ],
            2 => vec![Event::new(p.failure_migration, 10), Event::new(self.migration, 7)],
            3 => vec![Event::new(p.failure_reboot, 10), Event::new(trig(3), 2).closing()],
            4 => vec![Event::new(b.failure_fixing, 11), Event::new(trig(5), 9).closing()],
            5 => vec![Event::new(b.failure_reboot, 11), Event::new(trig(6), 9).closing()],
            6 => vec![Event::new(p.failure_fixing, 10), Event::new(trig(2), 2).closing()],
            7 => vec![Event::new(b.aging, 1)],
            // Aging primary; the backup is checked.
            8 => vec![
                Event::new(p.failure_idle, 10),
                Event::weighted(trig(1), c1, 2).closing(),
                Event::weighted(b.reboot, c2, 6),
                Event::weighted(b.fixing, c3, 3),
            ],
            9 => vec![Event::new(b.failure_migration, 11).closing(), Event::new(self.migration, 0)],
            10 => vec![Event::new(p.fixing, 0)],
            11 => vec![Event::new(b.fixing, 7)],
            _ => panic!("state index {state} out of range"),
        }
    }

    /// One-step transition matrix of the embedded chain.
    pub fn transition_matrix(&self) -> Result<Tpm, ModelError> {
        self.checked()?;
        let mut m = Matrix::zeros(N_STATES, N_STATES);
        for i in 0..N_STATES {
            let events = self.events(i);
            if events.len() == 1 {
                m[(i, events[0].target)] = 1.0;
                continue;
            }
            let probs = events
                .iter()
                .enumerate()
                .map(|(j, _)| race_probability(&events, j).map(|v| v.clamp(0.0, 1.0)))
                .collect::<Result<Vec<_>, _>>()?;
            let sum: f64 = probs.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(ModelError::RowSum { row: STATES[i].label(), sum });
            }
            let closing = events.iter().position(|e| e.closes_row);
            for (j, e) in events.iter().enumerate() {
                if Some(j) != closing {
                    m[(i, e.target)] += probs[j];
                }
            }
            if let Some(j) = closing {
                let rest: f64 = probs.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, p)| p).sum();
                m[(i, events[j].target)] += (1.0 - rest).clamp(0.0, 1.0);
            }
        }
        Ok(Tpm(m))
    }

    /// Mean sojourn time of every state.
    pub fn sojourn_times(&self) -> Result<SojournVector, ModelError> {
        self.checked()?;
        let mut h = Vector::zeros(N_STATES);
        for i in 0..N_STATES {
            h[i] = mean_sojourn(&self.events(i)).ok_or_else(|| ModelError::UnboundedSojourn(STATES[i].label()))??;
        }
        Ok(SojournVector(h))
    }

    /// Transition matrix with the repair transitions removed, split into the
    /// block among up states and the block into the two failed states.
    pub fn absorbing_blocks(&self) -> Result<AbsorbingBlocks, ModelError> {
        let p = self.transition_matrix()?.0;
        let m = p.view((0, 0), (N_UP, N_UP)).into_owned();
        let c_t = p.view((0, N_UP), (N_UP, N_STATES - N_UP)).into_owned();
        let mut alpha = Vector::zeros(N_UP);
        alpha[0] = 1.0;
        Ok(AbsorbingBlocks { m, c_t, alpha })
    }
}

/// Discontinuities and scale points of every event law.
fn event_breaks(events: &[Event]) -> Vec<f64> {
    events.iter().flat_map(|e| numerics::scale_points(&e.law)).collect()
}

/// Time beyond which the state has been left with probability at least
/// `1 - TAIL_MASS`; `None` when no event fires with certainty.
fn exit_horizon(events: &[Event]) -> Option<f64> {
    events
        .iter()
        .filter(|e| e.weight >= 1.0)
        .map(|e| e.law.truncation_point(TAIL_MASS))
        .min_by(f64::total_cmp)
}

/// Probability that event `j` fires first. Ties go to the earlier event.
fn race_probability(events: &[Event], j: usize) -> Result<f64, ModelError> {
    let ev = events[j];
    if ev.weight == 0.0 {
        return Ok(0.0);
    }
    let others = |x: f64| {
        events
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != j)
            .map(|(k, e)| 1.0 - if k < j { e.fired(x) } else { e.fired_before(x) })
            .product::<f64>()
    };
    let upper = events
        .iter()
        .enumerate()
        .filter(|&(k, e)| k != j && e.weight >= 1.0)
        .map(|(_, e)| e.law.truncation_point(TAIL_MASS))
        .fold(f64::INFINITY, f64::min);
    let v = numerics::stieltjes_upto(others, &ev.law, upper, &event_breaks(events), QUAD_TOL)?;
    Ok(ev.weight * v)
}

fn mean_sojourn(events: &[Event]) -> Option<Result<f64, ModelError>> {
    let horizon = exit_horizon(events)?;
    let survival = |t: f64| events.iter().map(|e| 1.0 - e.fired(t)).product::<f64>();
    // Tolerance relative to the horizon keeps the result invariant under a
    // change of time unit.
    let tol = QUAD_TOL * horizon.max(f64::MIN_POSITIVE);
    Some(numerics::integrate_pieces(survival, 0.0, horizon, &event_breaks(events), tol).map_err(Into::into))
}

/// Embedded-chain transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tpm(pub Matrix);

impl Tpm {
    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.0[(from, to)]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.0.row_iter().map(|r| r.sum()).collect()
    }

    /// Rows whose sum is off by more than `tol`, labelled.
    pub fn bad_rows(&self, tol: f64) -> Vec<(String, f64)> {
        self.row_sums()
            .into_iter()
            .enumerate()
            .filter(|(_, s)| (s - 1.0).abs() > tol)
            .map(|(i, s)| (STATES[i].label(), s))
            .collect()
    }

    /// Non-zero entries outside the kernel's structural pattern.
    pub fn pattern_violations(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..N_STATES {
            for j in 0..N_STATES {
                let v = self.0[(i, j)];
                if (v != 0.0 && !kernel_entry_allowed(i, j)) || v < 0.0 {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// Mean sojourn time per state, in hours.
#[derive(Debug, Clone, PartialEq)]
pub struct SojournVector(pub Vector);

impl SojournVector {
    pub fn get(&self, state: usize) -> f64 {
        self.0[state]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbsorbingBlocks {
    /// Transitions among the up states.
    pub m: Matrix,
    /// Transitions from up states into the failed states.
    pub c_t: Matrix,
    /// Initial distribution over up states.
    pub alpha: Vector,
}
