//! CSV output shared by every command.

use std::io::Write;

use cs_aging::simulator::Estimate;

pub const HEADER: [&str; 7] = ["variable", "value", "metric", "analytic", "sim_mean", "ci_low", "ci_high"];

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub variable: String,
    pub value: f64,
    pub metric: String,
    pub analytic: Option<f64>,
    pub sim: Option<(f64, f64, f64)>,
}

impl Row {
    pub fn analytic(variable: &str, value: f64, metric: &str, analytic: f64) -> Self {
        Self { variable: variable.into(), value, metric: metric.into(), analytic: Some(analytic), sim: None }
    }

    pub fn with_estimate(mut self, e: &Estimate) -> Self {
        self.sim = Some((e.mean, e.ci_low, e.ci_high));
        self
    }

    /// Analytic value inside the simulation interval.
    pub fn agrees(&self) -> Option<bool> {
        match (self.analytic, self.sim) {
            (Some(a), Some((_, lo, hi))) => Some(lo <= a && a <= hi),
            _ => None,
        }
    }

    fn record(&self) -> [String; 7] {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        [
            self.variable.clone(),
            self.value.to_string(),
            self.metric.clone(),
            opt(self.analytic),
            opt(self.sim.map(|s| s.0)),
            opt(self.sim.map(|s| s.1)),
            opt(self.sim.map(|s| s.2)),
        ]
    }
}

pub fn write_csv<W: Write>(out: W, rows: &[Row]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_sim_columns() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[Row::analytic("trigger_interval", 30.0, "mttf", 6701.5)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "variable,value,metric,analytic,sim_mean,ci_low,ci_high\ntrigger_interval,30,mttf,6701.5,,,\n"
        );
    }
}
