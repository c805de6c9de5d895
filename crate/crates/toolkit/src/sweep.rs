//! One-dimensional parameter sweeps with optimum location.

use std::fmt;
use std::str::FromStr;

use cs_aging::analysis::{self, WorkloadSpec};
use cs_aging::{Distribution, ModelParams};
use rayon::prelude::*;

use crate::error::ToolError;
use crate::report::Row;

pub const MAX_POINTS: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Availability,
    Mttf,
    Completion,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Availability, Metric::Mttf, Metric::Completion];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Availability => "availability",
            Metric::Mttf => "mttf",
            Metric::Completion => "completion",
        }
    }

    /// Whether `a` beats `b`; completion time is minimized, the rest maximized.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Metric::Completion => a < b,
            _ => a > b,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| format!("unknown metric `{s}` (availability, mttf, completion)"))
    }
}

pub fn parse_metrics(list: &str) -> Result<Vec<Metric>, String> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

/// Which triggers a trigger-interval sweep moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieMode {
    #[default]
    TiedAll,
    PrimaryOnly,
    BackupOnly,
}

impl FromStr for TieMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('_', "-").as_str() {
            "tied-all" | "all" => Ok(TieMode::TiedAll),
            "primary-only" | "primary" => Ok(TieMode::PrimaryOnly),
            "backup-only" | "backup" => Ok(TieMode::BackupOnly),
            _ => Err(format!("unknown tie mode `{s}` (tied-all, primary-only, backup-only)")),
        }
    }
}

/// A sweepable quantity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Variable {
    TriggerInterval(TieMode),
    /// Mean of both fixing laws, family kept.
    FixingMean,
    /// A single trigger `a1`..`a6`.
    Trigger(usize),
    /// Mean of a named law, e.g. `T_M.mean`.
    LawMean(String),
    /// Workload field: `workload.x`, `workload.x1`, `workload.r1` or `workload.t1`.
    Workload(String),
}

impl Variable {
    pub fn parse(name: &str, tie: TieMode) -> Result<Self, String> {
        let name = name.trim();
        match name {
            "trigger_interval" => return Ok(Variable::TriggerInterval(tie)),
            "fixing_mean" => return Ok(Variable::FixingMean),
            _ => {}
        }
        if let Some(i) = name.strip_prefix('a').and_then(|d| d.parse::<usize>().ok()) {
            if (1..=6).contains(&i) {
                return Ok(Variable::Trigger(i));
            }
        }
        if let Some(law) = name.strip_suffix(".mean") {
            if crate::config::DISTRIBUTION_NAMES.contains(&law) {
                return Ok(Variable::LawMean(law.to_string()));
            }
        }
        if let Some(field) = name.strip_prefix("workload.") {
            if ["x", "x1", "r1", "t1"].contains(&field) {
                return Ok(Variable::Workload(field.to_string()));
            }
        }
        Err(format!(
            "unknown sweep variable `{name}` (trigger_interval, fixing_mean, a1..a6, <law>.mean, workload.x|x1|r1|t1)"
        ))
    }

    pub fn label(&self) -> String {
        match self {
            Variable::TriggerInterval(_) => "trigger_interval".into(),
            Variable::FixingMean => "fixing_mean".into(),
            Variable::Trigger(i) => format!("a{i}"),
            Variable::LawMean(l) => format!("{l}.mean"),
            Variable::Workload(f) => format!("workload.{f}"),
        }
    }

    pub fn apply(&self, p: &mut ModelParams, w: &mut WorkloadSpec, value: f64) -> Result<(), ToolError> {
        let bad = |m: String| ToolError::Config(format!("{} = {value}: {m}", self.label()));
        match self {
            Variable::TriggerInterval(tie) => {
                if value < 0.0 {
                    return Err(bad("trigger offset negative".into()));
                }
                match tie {
                    TieMode::TiedAll => p.set_all_triggers(value),
                    TieMode::PrimaryOnly => p.set_primary_triggers(value),
                    TieMode::BackupOnly => p.set_backup_triggers(value),
                }
            }
            Variable::FixingMean => p.set_fixing_mean(value).map_err(|e| bad(e.to_string()))?,
            Variable::Trigger(i) => {
                if value < 0.0 {
                    return Err(bad("trigger offset negative".into()));
                }
                p.triggers[i - 1] = Distribution::Deterministic { offset: value };
            }
            Variable::LawMean(law) => {
                let slot: Vec<&mut Distribution> = match law.as_str() {
                    "T_u1" => vec![&mut p.primary.aging],
                    "T_u2" => vec![&mut p.backup.aging],
                    "T_f1" => vec![
                        &mut p.primary.failure_idle,
                        &mut p.primary.failure_migration,
                        &mut p.primary.failure_fixing,
                        &mut p.primary.failure_reboot,
                    ],
                    "T_f2" => vec![
                        &mut p.backup.failure_idle,
                        &mut p.backup.failure_migration,
                        &mut p.backup.failure_fixing,
                        &mut p.backup.failure_reboot,
                    ],
                    "T_fm1" => vec![&mut p.primary.failure_migration],
                    "T_fm2" => vec![&mut p.backup.failure_migration],
                    "T_fs1" => vec![&mut p.primary.failure_fixing],
                    "T_fs2" => vec![&mut p.backup.failure_fixing],
                    "T_fr1" => vec![&mut p.primary.failure_reboot],
                    "T_fr2" => vec![&mut p.backup.failure_reboot],
                    "T_r1" => vec![&mut p.primary.fixing],
                    "T_r2" => vec![&mut p.backup.fixing],
                    "T_R1" => vec![&mut p.primary.reboot],
                    "T_R2" => vec![&mut p.backup.reboot],
                    "T_M" => vec![&mut p.migration],
                    _ => unreachable!("validated at parse time"),
                };
                for d in slot {
                    *d = d.with_mean(value).map_err(|e| bad(e.to_string()))?;
                }
            }
            Variable::Workload(field) => match field.as_str() {
                "x" => {
                    let share = w.x1 / w.x;
                    w.x = value;
                    w.x1 = share * value;
                }
                "x1" => w.x1 = value,
                "r1" => w.r1 = value,
                "t1" => w.t1 = Some(value),
                _ => unreachable!("validated at parse time"),
            },
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: Variable,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    pub metrics: Vec<Metric>,
    pub refine: bool,
}

impl SweepSpec {
    pub fn grid(&self) -> Result<Vec<f64>, ToolError> {
        let bad = |m: &str| ToolError::Config(format!("sweep: {m}"));
        if !(self.start.is_finite() && self.stop.is_finite() && self.start <= self.stop) {
            return Err(bad("need start ≤ stop"));
        }
        if self.step.is_nan() || self.step <= 0.0 {
            return Err(bad("step must be positive"));
        }
        let span = (self.stop - self.start) / self.step;
        if span > MAX_POINTS {
            return Err(bad("more than 1e6 grid steps"));
        }
        if self.metrics.is_empty() {
            return Err(bad("no metrics requested"));
        }
        let n = (span + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| self.start + i as f64 * self.step).collect())
    }
}

/// Best grid point of one metric, with the golden-section refinement when
/// requested.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub metric: Metric,
    pub at: f64,
    pub value: f64,
    pub refined: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<Row>,
    pub optima: Vec<Optimum>,
}

/// Metric values at one parameter point.
pub fn evaluate(
    base: &ModelParams,
    workload: &WorkloadSpec,
    variable: &Variable,
    value: f64,
    metrics: &[Metric],
) -> Result<Vec<f64>, ToolError> {
    let mut p = *base;
    let mut w = *workload;
    variable.apply(&mut p, &mut w, value)?;
    let needs_chain = metrics.iter().any(|m| *m != Metric::Completion);
    let report = if needs_chain { Some(analysis::analyze(&p, None)?) } else { None };
    metrics
        .iter()
        .map(|m| match m {
            Metric::Availability => Ok(report.as_ref().expect("computed").availability),
            Metric::Mttf => Ok(report.as_ref().expect("computed").mttf),
            Metric::Completion => Ok(analysis::completion_time(&p, &w)?),
        })
        .collect()
}

pub fn run(base: &ModelParams, workload: &WorkloadSpec, spec: &SweepSpec) -> Result<SweepResult, ToolError> {
    let grid = spec.grid()?;
    let values: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&x| evaluate(base, workload, &spec.variable, x, &spec.metrics))
        .collect::<Result<_, _>>()?;

    let label = spec.variable.label();
    let mut rows = Vec::with_capacity(grid.len() * spec.metrics.len());
    for (x, vals) in grid.iter().zip(&values) {
        for (m, v) in spec.metrics.iter().zip(vals) {
            rows.push(Row::analytic(&label, *x, m.name(), *v));
        }
    }

    let mut optima = Vec::new();
    for (k, &metric) in spec.metrics.iter().enumerate() {
        let mut best = 0;
        for i in 1..grid.len() {
            if metric.better(values[i][k], values[best][k]) {
                best = i;
            }
        }
        let refined = if spec.refine && grid.len() > 1 {
            let lo = grid[best.saturating_sub(1)];
            let hi = grid[(best + 1).min(grid.len() - 1)];
            let f = |x: f64| evaluate(base, workload, &spec.variable, x, &[metric]).map(|v| v[0]);
            let (x, v) = golden_section(f, lo, hi, metric, spec.step * 1e-6)?;
            metric.better(v, values[best][k]).then_some((x, v))
        } else {
            None
        };
        optima.push(Optimum { metric, at: grid[best], value: values[best][k], refined });
    }
    Ok(SweepResult { rows, optima })
}

/// Golden-section search for the best value of `f` on `[lo, hi]`.
pub fn golden_section<F>(f: F, mut lo: f64, mut hi: f64, metric: Metric, tol: f64) -> Result<(f64, f64), ToolError>
where
    F: Fn(f64) -> Result<f64, ToolError>,
{
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if metric.better(fa, fb) {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a)?;
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b)?;
        }
    }
    Ok(if metric.better(fb, fa) { (b, fb) } else { (a, fa) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(variable: Variable, start: f64, stop: f64, step: f64, metrics: Vec<Metric>) -> SweepSpec {
        SweepSpec { variable, start, stop, step, metrics, refine: false }
    }

    #[test]
    fn grid_includes_endpoints() {
        let s = spec(Variable::FixingMean, 0.8, 1.2, 0.1, vec![Metric::Availability]);
        let g = s.grid().unwrap();
        assert_eq!(g.len(), 5);
        assert!((g[4] - 1.2).abs() < 1e-12);
        let s = spec(Variable::FixingMean, 0.0, 1e7, 1.0, vec![Metric::Availability]);
        assert!(s.grid().is_err());
    }

    #[test]
    fn variable_names() {
        let t = TieMode::default();
        assert_eq!(Variable::parse("a4", t).unwrap(), Variable::Trigger(4));
        assert_eq!(Variable::parse("T_M.mean", t).unwrap(), Variable::LawMean("T_M".into()));
        assert!(Variable::parse("a7", t).is_err());
        assert!(Variable::parse("T_Q.mean", t).is_err());
    }

    #[test]
    fn golden_section_finds_parabola_peak() {
        let (x, v) = golden_section(|x| Ok(-(x - 1.3) * (x - 1.3)), 0.0, 3.0, Metric::Mttf, 1e-9).unwrap();
        assert!((x - 1.3).abs() < 1e-6);
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn no_failure_completion_sweep_is_monotone() {
        let mut p = ModelParams::exponential_defaults(0.0);
        let never = Distribution::Deterministic { offset: 1e12 };
        p.primary.set_failure(never);
        p.backup.set_failure(never);
        let w = WorkloadSpec::new(200.0, 0.5);
        let s = spec(Variable::TriggerInterval(TieMode::TiedAll), 0.0, 200.0, 20.0, vec![Metric::Completion]);
        let r = run(&p, &w, &s).unwrap();
        let vals: Vec<f64> = r.rows.iter().map(|row| row.analytic.unwrap()).collect();
        assert!(vals.windows(2).all(|p| p[1] > p[0]));
        assert_eq!(r.optima[0].at, 0.0);
        assert!((r.optima[0].value - 200.0).abs() < 1e-10);
    }

    #[test]
    fn ties_go_to_smaller_value() {
        // Completion ignores the backup-side trigger in the primary case.
        let p = ModelParams::hypo_failure_defaults(30.0);
        let w = WorkloadSpec::new(100.0, 1.0);
        let s = spec(Variable::Trigger(5), 0.0, 40.0, 10.0, vec![Metric::Completion]);
        let r = run(&p, &w, &s).unwrap();
        assert_eq!(r.optima[0].at, 0.0);
    }
}
