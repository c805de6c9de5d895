//! Model-consistency battery.

use cs_aging::analysis::{self, ctmc, RestartRoute, MASS_TOL};
use cs_aging::model::{Tpm, ROW_SUM_TOL};

use crate::config::Scenario;

pub const DERIVATIVE_TOL: f64 = 1e-5;
pub const CTMC_AVAILABILITY_TOL: f64 = 1e-6;
pub const CTMC_MTTF_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name, passed, detail: detail.into() }
    }
}

/// Transition matrix with the scenario's entry overrides written in.
pub fn overridden_tpm(s: &Scenario) -> Result<Tpm, String> {
    let mut tpm = s.params.transition_matrix().map_err(|e| e.to_string())?;
    for &(i, j, v) in &s.tpm_overrides {
        tpm.0[(i, j)] = v;
    }
    Ok(tpm)
}

pub fn run(s: &Scenario) -> Vec<Check> {
    let mut checks = Vec::new();
    let p = &s.params;

    let violations = p.validate();
    checks.push(Check::new("parameter invariants", violations.is_empty(), violations.join("; ")));

    let tpm = match overridden_tpm(s) {
        Ok(t) => t,
        Err(e) => {
            checks.push(Check::new("transition matrix", false, e));
            return checks;
        }
    };
    let bad = tpm.bad_rows(ROW_SUM_TOL);
    let detail = bad.iter().map(|(r, sum)| format!("row {r} sums to {sum:.10}")).collect::<Vec<_>>().join("; ");
    checks.push(Check::new("row sums", bad.is_empty(), detail));

    let pattern = tpm.pattern_violations();
    let detail = pattern.iter().map(|(i, j)| format!("L{i}->L{j}")).collect::<Vec<_>>().join(", ");
    checks.push(Check::new("sparsity pattern", pattern.is_empty(), detail));

    match p.sojourn_times() {
        Ok(h) => {
            let ok = h.0.iter().all(|v| v.is_finite() && *v >= 0.0);
            checks.push(Check::new("sojourn times", ok, ""));
            if bad.is_empty() {
                match analysis::report_from(tpm, h, None) {
                    Ok(r) => {
                        let down = r.pi[10] + r.pi[11];
                        let ok = (r.availability + down - 1.0).abs() < 1e-12
                            && r.availability > 0.0
                            && r.availability < 1.0
                            && r.mttf > 0.0;
                        checks.push(Check::new(
                            "steady state and MTTF",
                            ok,
                            format!("availability {:.10}, MTTF {:.4} h", r.availability, r.mttf),
                        ));
                    }
                    Err(e) => checks.push(Check::new("steady state and MTTF", false, e.to_string())),
                }
            }
        }
        Err(e) => checks.push(Check::new("sojourn times", false, e.to_string())),
    }

    let mut w = s.workload_or_default();
    for route in [RestartRoute::Primary, RestartRoute::Backup] {
        w.restart_route = route;
        let name = match route {
            RestartRoute::Primary => "completion mass (printed routing)",
            RestartRoute::Backup => "completion mass (self routing)",
        };
        let result = analysis::completion_lst_primary(p, &w, 0.0)
            .and_then(|a| analysis::completion_lst_backup(p, &w, 0.0).map(|b| (a, b)));
        match result {
            Ok((a, b)) => checks.push(Check::new(
                name,
                (a - 1.0).abs() <= MASS_TOL && (b - 1.0).abs() <= MASS_TOL,
                format!("Φ1(0) = {a:.12}, Φ2(0) = {b:.12}"),
            )),
            Err(e) => checks.push(Check::new(name, false, e.to_string())),
        }
    }

    let w = s.workload_or_default();
    match (analysis::completion_time(p, &w), analysis::completion_time_analytic(p, &w)) {
        (Ok(fd), Ok(an)) => {
            let rel = (fd / an - 1.0).abs();
            checks.push(Check::new(
                "completion derivative",
                rel <= DERIVATIVE_TOL,
                format!("finite-difference {fd:.6} h, analytic {an:.6} h, relative {rel:.2e}"),
            ));
        }
        (Err(e), _) | (_, Err(e)) => checks.push(Check::new("completion derivative", false, e.to_string())),
    }

    let exponential = p.all_laws().iter().filter(|(n, _)| !n.starts_with("trigger")).all(|(_, d)| d.is_exponential());
    if exponential && s.tpm_overrides.is_empty() {
        let q = ctmc::exponential_triggers(p);
        let result = ctmc::Ctmc::build(&q).and_then(|c| {
            Ok((c.availability()?, c.mttf()?, analysis::availability(&q)?, analysis::mttf(&q)?))
        });
        match result {
            Ok((ca, cm, sa, sm)) => {
                let ok = (ca - sa).abs() <= CTMC_AVAILABILITY_TOL && (cm / sm - 1.0).abs() <= CTMC_MTTF_TOL;
                checks.push(Check::new(
                    "CTMC oracle",
                    ok,
                    format!("availability {sa:.10} vs {ca:.10}, MTTF {sm:.4} vs {cm:.4}"),
                ));
            }
            Err(e) => checks.push(Check::new("CTMC oracle", false, e.to_string())),
        }
    }
    checks
}
