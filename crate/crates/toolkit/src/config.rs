//! JSON scenario files.
//!
//! Layering: the exponential defaults come first, then the preset's
//! families, then the entries under `distributions`, then triggers, branch
//! probabilities and the workload.

use std::collections::BTreeMap;
use std::path::Path;

use cs_aging::analysis::{RestartRoute, WorkloadSpec};
use cs_aging::model::{parse_state, Branch, ModelParams, N_STATES};
use cs_aging::Distribution;
use serde::Deserialize;

use crate::error::ToolError;
use crate::presets::Preset;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_TRIGGER: f64 = 30.0;
pub const DEFAULT_WORK: f64 = 200.0;

/// Names accepted under `distributions`.
pub const DISTRIBUTION_NAMES: [&str; 15] = [
    "T_u1", "T_u2", "T_f1", "T_f2", "T_fm1", "T_fm2", "T_fs1", "T_fs2", "T_fr1", "T_fr2", "T_r1", "T_r2", "T_R1",
    "T_R2", "T_M",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
pub enum Unit {
    #[serde(rename = "s")]
    Seconds,
    #[serde(rename = "min")]
    Minutes,
    #[default]
    #[serde(rename = "h")]
    Hours,
    #[serde(rename = "d")]
    Days,
}

impl Unit {
    pub fn hours(self) -> f64 {
        match self {
            Unit::Seconds => 1.0 / 3600.0,
            Unit::Minutes => 1.0 / 60.0,
            Unit::Hours => 1.0,
            Unit::Days => 24.0,
        }
    }
}

/// A duration written as a number (in the surrounding unit, hours by
/// default) or as a string with a unit suffix such as `"90min"`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Duration {
    Number(f64),
    Text(String),
}

impl Duration {
    pub fn hours(&self, unit: Unit) -> Result<f64, String> {
        match self {
            Duration::Number(v) => Ok(v * unit.hours()),
            Duration::Text(s) => parse_duration(s, unit),
        }
    }
}

/// Parses `"30"`, `"30h"`, `"1.5 d"`, `"90min"` or `"45s"` into hours.
pub fn parse_duration(text: &str, default_unit: Unit) -> Result<f64, String> {
    let t = text.trim();
    let split = t.find(|c: char| c.is_ascii_alphabetic()).unwrap_or(t.len());
    let (num, suffix) = t.split_at(split);
    let value: f64 = num.trim().parse().map_err(|_| format!("cannot read duration `{text}`"))?;
    let unit = match suffix.trim() {
        "" => default_unit,
        "s" | "sec" => Unit::Seconds,
        "m" | "min" => Unit::Minutes,
        "h" | "hr" => Unit::Hours,
        "d" | "day" | "days" => Unit::Days,
        other => return Err(format!("unknown unit `{other}` in `{text}`")),
    };
    Ok(value * unit.hours())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    #[serde(alias = "exponential")]
    Exp,
    Erlang,
    #[serde(alias = "hypoexponential")]
    Hypo,
    #[serde(alias = "deterministic")]
    Det,
}

/// A distribution entry. Rates are per `unit`; durations without a suffix
/// are in `unit`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistConfig {
    pub kind: Kind,
    pub rate: Option<f64>,
    pub shape: Option<u32>,
    pub rate1: Option<f64>,
    pub rate2: Option<f64>,
    pub offset: Option<Duration>,
    pub mean: Option<Duration>,
    #[serde(default)]
    pub unit: Unit,
}

impl DistConfig {
    pub fn build(&self) -> Result<Distribution, String> {
        let per_hour = |r: f64| r / self.unit.hours();
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| format!("`{name}` is required"));
        let mean = self.mean.as_ref().map(|m| m.hours(self.unit)).transpose()?;
        let d = match self.kind {
            Kind::Exp => match (self.rate, mean) {
                (Some(r), None) => Distribution::Exponential { rate: per_hour(r) },
                (None, Some(m)) => Distribution::exponential_mean(m).map_err(|e| e.to_string())?,
                _ => return Err("exp needs exactly one of `rate` or `mean`".into()),
            },
            Kind::Erlang => {
                let shape = self.shape.ok_or("`shape` is required")?;
                let rate = match (self.rate, mean) {
                    (Some(r), None) => per_hour(r),
                    (None, Some(m)) => f64::from(shape) / m,
                    _ => return Err("erlang needs exactly one of `rate` or `mean`".into()),
                };
                Distribution::Erlang { rate, shape }
            }
            Kind::Hypo => Distribution::Hypoexponential {
                rate1: per_hour(need(self.rate1, "rate1")?),
                rate2: per_hour(need(self.rate2, "rate2")?),
            },
            Kind::Det => {
                let offset = match (&self.offset, mean) {
                    (Some(o), None) => o.hours(self.unit)?,
                    (None, Some(m)) => m,
                    _ => return Err("det needs exactly one of `offset` or `mean`".into()),
                };
                Distribution::Deterministic { offset }
            }
        };
        d.validate().map_err(|e| e.to_string())?;
        Ok(d)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct TriggerConfig {
    pub tied_all: Option<Duration>,
    pub tied_primary: Option<Duration>,
    pub tied_backup: Option<Duration>,
    pub a1: Option<Duration>,
    pub a2: Option<Duration>,
    pub a3: Option<Duration>,
    pub a4: Option<Duration>,
    pub a5: Option<Duration>,
    pub a6: Option<Duration>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchConfig {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct WorkloadConfig {
    pub x: Option<Duration>,
    pub x1: Option<Duration>,
    pub r1: Option<f64>,
    pub b1: Option<f64>,
    pub b2: Option<f64>,
    pub t1: Option<Duration>,
    pub restart_overhead_primary: Option<DistConfig>,
    pub restart_overhead_backup: Option<DistConfig>,
    pub restart_route: Option<RestartRoute>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TpmOverride {
    pub from: String,
    pub to: String,
    pub value: f64,
}

/// Optional sweep defaults stored with a scenario; command-line flags win.
#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub var: Option<String>,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub step: Option<f64>,
    pub metrics: Option<Vec<String>>,
    pub tie: Option<String>,
    #[serde(default)]
    pub refine: bool,
    pub outer: Option<OuterSweep>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuterSweep {
    pub var: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema: u32,
    pub description: Option<String>,
    pub preset: Option<String>,
    #[serde(default)]
    pub distributions: BTreeMap<String, DistConfig>,
    pub triggers: Option<TriggerConfig>,
    pub branch: Option<BranchConfig>,
    pub workload: Option<WorkloadConfig>,
    #[serde(default)]
    pub tpm_overrides: Vec<TpmOverride>,
    pub sweep: Option<SweepConfig>,
}

/// A fully resolved scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub description: Option<String>,
    pub preset: Option<Preset>,
    pub params: ModelParams,
    pub workload: Option<WorkloadSpec>,
    pub tpm_overrides: Vec<(usize, usize, f64)>,
    pub sweep: Option<SweepConfig>,
}

impl Scenario {
    /// Workload to use for checks that need one.
    pub fn workload_or_default(&self) -> WorkloadSpec {
        self.workload.unwrap_or_else(|| WorkloadSpec::new(DEFAULT_WORK, 1.0))
    }
}

pub fn load(path: &Path) -> Result<Scenario, ToolError> {
    let text = std::fs::read_to_string(path).map_err(|e| ToolError::Config(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|e| match e {
        ToolError::Config(m) => ToolError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse(text: &str) -> Result<Scenario, ToolError> {
    let file: ConfigFile = serde_json::from_str(text).map_err(|e| ToolError::Config(e.to_string()))?;
    resolve(file)
}

fn field<T>(path: &str, r: Result<T, String>) -> Result<T, ToolError> {
    r.map_err(|m| ToolError::Config(format!("{path}: {m}")))
}

pub fn resolve(file: ConfigFile) -> Result<Scenario, ToolError> {
    if file.schema != SCHEMA_VERSION {
        return Err(ToolError::Config(format!("schema: expected {SCHEMA_VERSION}, found {}", file.schema)));
    }
    let mut p = ModelParams::exponential_defaults(DEFAULT_TRIGGER);
    let preset = file
        .preset
        .as_deref()
        .map(|name| field("preset", name.parse::<Preset>()))
        .transpose()?;
    if let Some(preset) = preset {
        preset.apply(&mut p);
    }
    apply_distributions(&mut p, &file.distributions)?;
    if let Some(t) = &file.triggers {
        apply_triggers(&mut p, t)?;
    }
    if let Some(b) = file.branch {
        p.branch = Branch { c1: b.c1, c2: b.c2, c3: b.c3 };
    }
    let violations = p.validate();
    if !violations.is_empty() {
        return Err(ToolError::Config(violations.join("; ")));
    }
    let workload = file.workload.as_ref().map(build_workload).transpose()?;
    let tpm_overrides = file
        .tpm_overrides
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let path = format!("tpm_overrides[{i}]");
            let state = |s: &str| parse_state(s).ok_or_else(|| format!("unknown state `{s}` (L0..L{})", N_STATES - 1));
            let from = field(&path, state(&o.from))?;
            let to = field(&path, state(&o.to))?;
            if !(0.0..=1.0).contains(&o.value) {
                return Err(ToolError::Config(format!("{path}: value {} is not a probability", o.value)));
            }
            Ok((from, to, o.value))
        })
        .collect::<Result<_, _>>()?;
    Ok(Scenario { description: file.description, preset, params: p, workload, tpm_overrides, sweep: file.sweep })
}

fn apply_distributions(p: &mut ModelParams, entries: &BTreeMap<String, DistConfig>) -> Result<(), ToolError> {
    let mut built = BTreeMap::new();
    for (name, cfg) in entries {
        if !DISTRIBUTION_NAMES.contains(&name.as_str()) {
            return Err(ToolError::Config(format!(
                "distributions: unknown variable `{name}` (expected one of {})",
                DISTRIBUTION_NAMES.join(", ")
            )));
        }
        built.insert(name.as_str(), field(&format!("distributions.{name}"), cfg.build())?);
    }
    // Generic failure laws first so the context-specific ones can refine them.
    for (name, host) in [("T_f1", &mut p.primary), ("T_f2", &mut p.backup)] {
        if let Some(d) = built.get(name) {
            host.set_failure(*d);
        }
    }
    for (name, d) in built {
        match name {
            "T_u1" => p.primary.aging = d,
            "T_u2" => p.backup.aging = d,
            "T_fm1" => p.primary.failure_migration = d,
            "T_fm2" => p.backup.failure_migration = d,
            "T_fs1" => p.primary.failure_fixing = d,
            "T_fs2" => p.backup.failure_fixing = d,
            "T_fr1" => p.primary.failure_reboot = d,
            "T_fr2" => p.backup.failure_reboot = d,
            "T_r1" => p.primary.fixing = d,
            "T_r2" => p.backup.fixing = d,
            "T_R1" => p.primary.reboot = d,
            "T_R2" => p.backup.reboot = d,
            "T_M" => p.migration = d,
            _ => {}
        }
    }
    Ok(())
}

fn apply_triggers(p: &mut ModelParams, t: &TriggerConfig) -> Result<(), ToolError> {
    let hours = |name: &str, d: &Duration| -> Result<f64, ToolError> {
        let h = field(&format!("triggers.{name}"), d.hours(Unit::Hours))?;
        if !(h.is_finite() && h >= 0.0) {
            return Err(ToolError::Config(format!("triggers.{name}: trigger offset negative ({h})")));
        }
        Ok(h)
    };
    if let Some(d) = &t.tied_all {
        p.set_all_triggers(hours("tied_all", d)?);
    }
    if let Some(d) = &t.tied_primary {
        p.set_primary_triggers(hours("tied_primary", d)?);
    }
    if let Some(d) = &t.tied_backup {
        p.set_backup_triggers(hours("tied_backup", d)?);
    }
    let single = [&t.a1, &t.a2, &t.a3, &t.a4, &t.a5, &t.a6];
    for (i, d) in single.iter().enumerate() {
        if let Some(d) = d {
            p.triggers[i] = Distribution::Deterministic { offset: hours(&format!("a{}", i + 1), d)? };
        }
    }
    Ok(())
}

fn build_workload(w: &WorkloadConfig) -> Result<WorkloadSpec, ToolError> {
    let hours = |name: &str, d: &Option<Duration>| -> Result<Option<f64>, ToolError> {
        d.as_ref().map(|d| field(&format!("workload.{name}"), d.hours(Unit::Hours))).transpose()
    };
    let x = hours("x", &w.x)?.unwrap_or(DEFAULT_WORK);
    let mut spec = WorkloadSpec::new(x, w.r1.unwrap_or(1.0));
    if let Some(x1) = hours("x1", &w.x1)? {
        spec.x1 = x1;
    }
    match (w.b1, w.b2) {
        (Some(b1), Some(b2)) => (spec.b1, spec.b2) = (b1, b2),
        (Some(b1), None) => (spec.b1, spec.b2) = (b1, 1.0 - b1),
        (None, Some(b2)) => (spec.b1, spec.b2) = (1.0 - b2, b2),
        (None, None) => {}
    }
    spec.t1 = hours("t1", &w.t1)?;
    spec.restart_overhead_primary = w
        .restart_overhead_primary
        .as_ref()
        .map(|d| field("workload.restart_overhead_primary", d.build()))
        .transpose()?;
    spec.restart_overhead_backup = w
        .restart_overhead_backup
        .as_ref()
        .map(|d| field("workload.restart_overhead_backup", d.build()))
        .transpose()?;
    if let Some(route) = w.restart_route {
        spec.restart_route = route;
    }
    let v = spec.validate();
    if !v.is_empty() {
        return Err(ToolError::Config(format!("workload: {}", v.join("; "))));
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn durations() {
        assert_eq!(parse_duration("30", Unit::Hours).unwrap(), 30.0);
        assert_eq!(parse_duration("90min", Unit::Hours).unwrap(), 1.5);
        assert_eq!(parse_duration("2 d", Unit::Hours).unwrap(), 48.0);
        assert_eq!(parse_duration("30s", Unit::Hours).unwrap(), 30.0 / 3600.0);
        assert!(parse_duration("3 weeks", Unit::Hours).is_err());
    }

    #[test]
    fn minimal_config_is_exponential_defaults() {
        let s = parse(r#"{"schema": 1}"#).unwrap();
        assert_eq!(s.params, ModelParams::exponential_defaults(DEFAULT_TRIGGER));
        assert!(s.workload.is_none());
    }

    #[test]
    fn layering_order() {
        let s = parse(
            r#"{
                "schema": 1,
                "preset": "F_HYPO",
                "distributions": {
                    "T_f2": {"kind": "exp", "mean": "40d"},
                    "T_fs2": {"kind": "erlang", "rate": 0.5, "shape": 2, "unit": "d"},
                    "T_M": {"kind": "exp", "mean": "30s"}
                },
                "triggers": {"tied_all": "10h", "a3": 12}
            }"#,
        )
        .unwrap();
        let p = s.params;
        assert_eq!(p.primary.failure_idle.family(), "hypoexp");
        assert_eq!(p.backup.failure_idle, Distribution::Exponential { rate: 1.0 / 960.0 });
        assert_eq!(p.backup.failure_migration, Distribution::Exponential { rate: 1.0 / 960.0 });
        assert_eq!(p.backup.failure_fixing, Distribution::Erlang { rate: 0.5 / 24.0, shape: 2 });
        assert!((p.migration.mean() - 30.0 / 3600.0).abs() < 1e-15);
        assert_eq!(p.trigger(1), 10.0);
        assert_eq!(p.trigger(3), 12.0);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = parse(r#"{"schema": 1, "distributons": {}}"#).unwrap_err();
        assert!(err.to_string().contains("unknown field `distributons`"), "{err}");
        assert!(err.to_string().contains("line 1"));
        let err = parse(r#"{"schema": 1, "distributions": {"T_x9": {"kind": "exp", "rate": 1}}}"#).unwrap_err();
        assert!(err.to_string().contains("T_x9"));
        let err = parse(r#"{"schema": 2}"#).unwrap_err();
        assert!(err.to_string().contains("schema"));
    }

    #[test]
    fn simplex_violation_is_a_config_error() {
        let err = parse(r#"{"schema": 1, "branch": {"c1": 0.5, "c2": 0.6, "c3": 0.1}}"#).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("c1+c2+c3"), "{err}");
    }

    #[test]
    fn workload_block() {
        let s = parse(r#"{"schema": 1, "workload": {"x": 120, "r1": 0.8, "b2": 0.25, "restart_route": "backup"}}"#)
            .unwrap();
        let w = s.workload.unwrap();
        assert_eq!((w.x, w.x1, w.r1, w.b1, w.b2), (120.0, 60.0, 0.8, 0.75, 0.25));
        assert_eq!(w.restart_route, RestartRoute::Backup);
    }

    #[test]
    fn overrides_name_states() {
        let s = parse(r#"{"schema": 1, "tpm_overrides": [{"from": "L1", "to": "L9", "value": 0.5}]}"#).unwrap();
        assert_eq!(s.tpm_overrides, vec![(1, 9, 0.5)]);
        assert!(parse(r#"{"schema": 1, "tpm_overrides": [{"from": "L13", "to": "L9", "value": 0.5}]}"#).is_err());
    }
}
