use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use cs_aging::analysis;
use cs_aging::model::{ModelParams, STATES};
use cs_aging::simulator::{self, SimConfig};

use crate::config::{self, Scenario};
use crate::error::ToolError;
use crate::report::{self, Row};
use crate::sweep::{self, Metric, SweepSpec, TieMode, Variable};
use crate::validate;

#[derive(Debug, Parser)]
#[command(name = "cs-aging", version, about = "Availability, MTTF and completion time of an aging primary/backup container host pair")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one configuration.
    Analyze(AnalyzeArgs),
    /// Sweep one parameter and locate the optimum of each metric.
    Sweep(SweepArgs),
    /// Compare analytic values with discrete-event simulation.
    Simulate(SimulateArgs),
    /// Run the model-consistency checks.
    Validate(ConfigArg),
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// CSV output file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Set every trigger to this many hours.
    #[arg(long)]
    pub trigger: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long = "var")]
    pub var: Option<String>,
    #[arg(long)]
    pub from: Option<f64>,
    #[arg(long)]
    pub to: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    /// Comma-separated subset of availability,mttf,completion.
    #[arg(long)]
    pub metrics: Option<String>,
    /// Refine each optimum by golden-section search.
    #[arg(long)]
    pub refine: bool,
    /// Triggers moved by trigger_interval: tied-all, primary-only or backup-only.
    #[arg(long)]
    pub tie: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub reps: usize,
    #[arg(long)]
    pub seed: u64,
    /// Simulated hours per availability replication.
    #[arg(long, default_value_t = 1e5)]
    pub horizon: f64,
    /// Hours discarded at the start of each availability replication.
    #[arg(long, default_value_t = 1e4)]
    pub warmup: f64,
    /// Comma-separated trigger intervals; every trigger is set to each in turn.
    #[arg(long)]
    pub triggers: Option<String>,
    #[arg(long)]
    pub metrics: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn emit(out: Option<&Path>, stdout: &mut dyn Write, rows: &[Row]) -> Result<(), ToolError> {
    match out {
        Some(path) => report::write_csv(File::create(path)?, rows)?,
        None => report::write_csv(stdout, rows)?,
    }
    Ok(())
}

fn parse_list(text: &str) -> Result<Vec<f64>, ToolError> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| config::parse_duration(s, config::Unit::Hours).map_err(ToolError::Config))
        .collect()
}

pub fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), ToolError> {
    match cli.command {
        Command::Analyze(a) => analyze(a, stdout),
        Command::Sweep(a) => run_sweep(a, stdout, stderr),
        Command::Simulate(a) => simulate(a, stdout, stderr),
        Command::Validate(a) => run_validate(&a.config, stdout),
    }
}

fn analyze(args: AnalyzeArgs, stdout: &mut dyn Write) -> Result<(), ToolError> {
    let mut s = config::load(&args.config)?;
    if let Some(t) = args.trigger {
        if t < 0.0 {
            return Err(ToolError::Config(format!("--trigger: trigger offset negative ({t})")));
        }
        s.params.set_all_triggers(t);
    }
    let completion = s.workload.as_ref().map(|w| analysis::completion_time(&s.params, w)).transpose()?;
    let report = if s.tpm_overrides.is_empty() {
        analysis::report_from(s.params.transition_matrix().map_err(analysis::AnalysisError::from)?, s.params.sojourn_times().map_err(analysis::AnalysisError::from)?, completion)?
    } else {
        let tpm = validate::overridden_tpm(&s).map_err(ToolError::Numerical)?;
        let bad = tpm.bad_rows(cs_aging::model::ROW_SUM_TOL);
        if let Some((row, sum)) = bad.first() {
            return Err(ToolError::Config(format!("tpm_overrides: row {row} sums to {sum}")));
        }
        let h = s.params.sojourn_times().map_err(analysis::AnalysisError::from)?;
        analysis::report_from(tpm, h, completion)?
    };

    let a1 = s.params.trigger(1);
    if let Some(d) = &s.description {
        writeln!(stdout, "# {d}")?;
    }
    writeln!(stdout, "trigger a1         {a1} h")?;
    writeln!(stdout, "availability       {:.10}", report.availability)?;
    writeln!(stdout, "mttf               {:.4} h", report.mttf)?;
    if let Some(c) = report.completion_time {
        writeln!(stdout, "completion time    {c:.4} h")?;
    }
    writeln!(stdout, "{:<14} {:>16} {:>14} {:>14}", "state", "pi", "visits", "sojourn_h")?;
    for (i, st) in STATES.iter().enumerate() {
        let visits = report.visits.get(i).map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into());
        writeln!(stdout, "{:<14} {:>16.10e} {:>14} {:>14.6}", st.to_string(), report.pi[i], visits, report.sojourn.get(i))?;
    }

    if let Some(path) = &args.out {
        let mut rows = vec![
            Row::analytic("trigger_interval", a1, "availability", report.availability),
            Row::analytic("trigger_interval", a1, "mttf", report.mttf),
        ];
        if let Some(c) = report.completion_time {
            rows.push(Row::analytic("trigger_interval", a1, "completion", c));
        }
        for (i, v) in report.pi.iter().enumerate() {
            rows.push(Row::analytic("trigger_interval", a1, &format!("pi_L{i}"), *v));
        }
        for (i, v) in report.visits.iter().enumerate() {
            rows.push(Row::analytic("trigger_interval", a1, &format!("visits_L{i}"), *v));
        }
        report::write_csv(File::create(path)?, &rows)?;
    }
    Ok(())
}

fn default_metrics(s: &Scenario) -> Vec<Metric> {
    let mut m = vec![Metric::Availability, Metric::Mttf];
    if s.workload.is_some() {
        m.push(Metric::Completion);
    }
    m
}

fn run_sweep(args: SweepArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), ToolError> {
    let s = config::load(&args.config)?;
    let stored = s.sweep.clone().unwrap_or_default();
    let missing = |flag: &str| ToolError::Config(format!("sweep: --{flag} is required"));
    let tie_text = args.tie.or(stored.tie);
    let tie: TieMode = tie_text.as_deref().map(str::parse).transpose().map_err(ToolError::Config)?.unwrap_or_default();
    let var_name = args.var.or(stored.var).ok_or_else(|| missing("var"))?;
    let variable = Variable::parse(&var_name, tie).map_err(ToolError::Config)?;
    let metrics = match args.metrics {
        Some(list) => sweep::parse_metrics(&list).map_err(ToolError::Config)?,
        None => match stored.metrics {
            Some(list) => list.iter().map(|m| m.parse()).collect::<Result<_, _>>().map_err(ToolError::Config)?,
            None => default_metrics(&s),
        },
    };
    let spec = SweepSpec {
        variable,
        start: args.from.or(stored.from).ok_or_else(|| missing("from"))?,
        stop: args.to.or(stored.to).ok_or_else(|| missing("to"))?,
        step: args.step.or(stored.step).ok_or_else(|| missing("step"))?,
        metrics,
        refine: args.refine || stored.refine,
    };
    let workload = s.workload_or_default();

    let outer: Vec<(Option<Variable>, f64)> = match &stored.outer {
        Some(o) => {
            let v = Variable::parse(&o.var, tie).map_err(ToolError::Config)?;
            o.values.iter().map(|x| (Some(v.clone()), *x)).collect()
        }
        None => vec![(None, f64::NAN)],
    };

    let mut rows = Vec::new();
    for (outer_var, outer_value) in outer {
        let mut params: ModelParams = s.params;
        let mut w = workload;
        let mut prefix = String::new();
        if let Some(v) = &outer_var {
            v.apply(&mut params, &mut w, outer_value)?;
            prefix = format!("{}={outer_value} ", v.label());
        }
        let mut result = sweep::run(&params, &w, &spec)?;
        for opt in &result.optima {
            write!(stderr, "{prefix}optimum {}: {}={} value={}", opt.metric, spec.variable.label(), opt.at, opt.value)?;
            if let Some((x, v)) = opt.refined {
                write!(stderr, " refined {}={x:.6} value={v}", spec.variable.label())?;
            }
            writeln!(stderr)?;
        }
        if let Some(v) = &outer_var {
            for r in &mut result.rows {
                r.variable = format!("{}@{}={outer_value}", r.variable, v.label());
            }
        }
        rows.extend(result.rows);
    }
    emit(args.out.as_deref(), stdout, &rows)
}

fn simulate(args: SimulateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), ToolError> {
    let s = config::load(&args.config)?;
    let mut sim = SimConfig::new(args.reps, args.seed);
    sim.availability_horizon = args.horizon;
    sim.warmup = args.warmup;
    sim.validate()?;
    let metrics = match &args.metrics {
        Some(list) => sweep::parse_metrics(list).map_err(ToolError::Config)?,
        None => default_metrics(&s),
    };
    let triggers = match &args.triggers {
        Some(list) => parse_list(list)?,
        None => vec![s.params.trigger(1)],
    };
    let workload = s.workload_or_default();

    let mut rows = Vec::new();
    for (i, &t) in triggers.iter().enumerate() {
        let mut p = s.params;
        if args.triggers.is_some() {
            p.set_all_triggers(t);
        }
        let mut c = sim;
        c.seed = args.seed.wrapping_add(i as u64);
        for m in &metrics {
            let (analytic, estimate) = match m {
                Metric::Availability => (analysis::availability(&p)?, simulator::simulate_availability(&p, &c)?),
                Metric::Mttf => (analysis::mttf(&p)?, simulator::simulate_mttf(&p, &c)?),
                Metric::Completion => (
                    analysis::completion_time(&p, &workload)?,
                    simulator::simulate_completion(&p, &workload, &c)?,
                ),
            };
            let row = Row::analytic("trigger_interval", t, m.name(), analytic).with_estimate(&estimate);
            writeln!(
                stderr,
                "trigger {t} {m}: analytic {analytic} sim {} [{}, {}] {}{}",
                estimate.mean,
                estimate.ci_low,
                estimate.ci_high,
                if row.agrees() == Some(true) { "agree" } else { "DISAGREE" },
                if estimate.censored > 0 { format!(" ({} censored)", estimate.censored) } else { String::new() },
            )?;
            rows.push(row);
        }
    }
    emit(args.out.as_deref(), stdout, &rows)
}

fn run_validate(path: &Path, stdout: &mut dyn Write) -> Result<(), ToolError> {
    let s = config::load(path)?;
    let checks = validate::run(&s);
    let mut failed = 0;
    for c in &checks {
        if !c.passed {
            failed += 1;
        }
        let status = if c.passed { "PASS" } else { "FAIL" };
        if c.detail.is_empty() {
            writeln!(stdout, "{status} {}", c.name)?;
        } else {
            writeln!(stdout, "{status} {}: {}", c.name, c.detail)?;
        }
    }
    if failed > 0 {
        Err(ToolError::ValidationFailed(failed))
    } else {
        Ok(())
    }
}
