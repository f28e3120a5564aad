use std::path::Path;

use serde::{Deserialize, Serialize};

use super::estimators::{
    refs, Chi2Laplace, EventRow, ForgettingReport, GronwallRow, LaplaceRow, MomentRow, TraceReport,
};
use super::stats::EstimateWithCI;
use crate::error::Result;

/// One PASS/FAIL line of a summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// δ, a moment order, or another scenario parameter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<f64>,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_low: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_high: Option<f64>,
    pub bound: f64,
    pub pass: bool,
    pub paper_ref: String,
}

impl Check {
    pub fn new(name: &str, value: f64, bound: f64, pass: bool, paper_ref: &str) -> Self {
        Self {
            name: name.to_string(),
            t: None,
            param: None,
            value,
            ci_low: None,
            ci_high: None,
            bound,
            pass,
            paper_ref: paper_ref.to_string(),
        }
    }

    pub fn at(mut self, t: f64) -> Self {
        self.t = Some(t);
        self
    }

    pub fn param(mut self, p: f64) -> Self {
        self.param = Some(p);
        self
    }

    pub fn ci(mut self, e: &EstimateWithCI) -> Self {
        self.ci_low = Some(e.ci_low);
        self.ci_high = Some(e.ci_high);
        self
    }
}

/// Machine-readable verdict of one scenario run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: String,
    pub pass: bool,
    pub details: Vec<Check>,
    pub paper_refs: Vec<String>,
}

impl Summary {
    pub fn new(scenario: &str) -> Self {
        Self {
            scenario: scenario.to_string(),
            pass: true,
            details: Vec::new(),
            paper_refs: Vec::new(),
        }
    }

    pub fn push(&mut self, check: Check) {
        self.pass &= check.pass;
        if !self.paper_refs.contains(&check.paper_ref) {
            self.paper_refs.push(check.paper_ref.clone());
        }
        self.details.push(check);
    }

    pub fn passed(&self) -> usize {
        self.details.iter().filter(|c| c.pass).count()
    }
}

/// Full double precision in scientific notation.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// A CSV table held in memory before it is written.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn write_summary(path: &Path, s: &Summary) -> Result<()> {
    let mut text = serde_json::to_string_pretty(s)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn b(v: bool) -> String {
    v.to_string()
}

pub fn event_table(rows: &[EventRow], paper_ref: &str, summary: &mut Summary) -> Table {
    let mut t = Table::new(&["t", "delta", "frequency", "ci_low", "ci_high", "threshold", "pass"]);
    for r in rows {
        t.push(vec![
            fmt_f64(r.t),
            fmt_f64(r.delta),
            fmt_f64(r.estimate.point),
            fmt_f64(r.estimate.ci_low),
            fmt_f64(r.estimate.ci_high),
            fmt_f64(r.threshold),
            b(r.pass),
        ]);
        summary.push(
            Check::new("event", r.estimate.point, r.threshold, r.pass, paper_ref)
                .at(r.t)
                .param(r.delta)
                .ci(&r.estimate),
        );
    }
    t
}

pub fn moment_table(rows: &[MomentRow], paper_ref: &str, summary: &mut Summary) -> Table {
    let mut t = Table::new(&["t", "n", "moment", "ci_low", "ci_high", "bound", "pass"]);
    for r in rows {
        t.push(vec![
            fmt_f64(r.t),
            r.n.to_string(),
            fmt_f64(r.estimate.point),
            fmt_f64(r.estimate.ci_low),
            fmt_f64(r.estimate.ci_high),
            fmt_f64(r.bound),
            b(r.pass),
        ]);
        summary.push(
            Check::new("moment", r.estimate.point, r.bound, r.pass, paper_ref)
                .at(r.t)
                .param(r.n as f64)
                .ci(&r.estimate),
        );
    }
    t
}

pub fn laplace_table(rows: &[LaplaceRow], paper_ref: &str, summary: &mut Summary) -> Table {
    let mut t = Table::new(&["t", "coefficient", "estimate", "ci_low", "ci_high", "bound", "overflowed", "pass"]);
    for r in rows {
        let (p, lo, hi) = r
            .estimate
            .map_or((f64::NAN, f64::NAN, f64::NAN), |e| (e.point, e.ci_low, e.ci_high));
        t.push(vec![
            fmt_f64(r.t),
            fmt_f64(r.coefficient),
            fmt_f64(p),
            fmt_f64(lo),
            fmt_f64(hi),
            fmt_f64(r.bound),
            r.overflowed.to_string(),
            b(r.pass),
        ]);
        let mut c = Check::new("laplace", p, r.bound, r.pass, paper_ref).at(r.t);
        if let Some(e) = &r.estimate {
            c = c.ci(e);
        }
        summary.push(c);
    }
    t
}

pub fn chi2_table(r: &Chi2Laplace, summary: &mut Summary) -> Table {
    let mut t = Table::new(&["chi", "estimate", "ci_low", "ci_high", "bound", "pass"]);
    t.push(vec![
        fmt_f64(r.chi),
        fmt_f64(r.estimate.point),
        fmt_f64(r.estimate.ci_low),
        fmt_f64(r.estimate.ci_high),
        fmt_f64(r.bound),
        b(r.pass),
    ]);
    summary.push(Check::new("chi2-laplace", r.estimate.point, r.bound, r.pass, refs::CHI_LAPLACE).ci(&r.estimate));
    t
}

pub fn trace_table(r: &TraceReport, summary: &mut Summary) -> Table {
    let mut t = Table::new(&["t", "tau", "max_trace", "mean_trace"]);
    for row in &r.profile {
        t.push(row.iter().map(|&v| fmt_f64(v)).collect());
    }
    summary.push(Check::new("trace-violation", r.max_violation, r.tolerance, r.pass, refs::TRACE).at(r.worst_t));
    t
}

pub fn forgetting_table(r: &ForgettingReport, orders: &[u32], summary: &mut Summary) -> Table {
    let mut header = vec!["t".to_string(), "mean_delta_pow".to_string()];
    header.extend(orders.iter().map(|n| format!("mean_delta_n{n}")));
    let mut t = Table {
        header,
        rows: Vec::new(),
    };
    for row in &r.profile {
        t.push(row.iter().map(|&v| fmt_f64(v)).collect());
    }
    summary.push(
        Check::new("decay-rate", r.fitted_rate, r.threshold - r.slack, r.rate_pass, refs::FORGETTING_RATE)
            .param(r.delta_exponent),
    );
    for u in &r.uniform {
        summary.push(
            Check::new("uniform-moment-trend", u.trend.p_increasing, 0.05, u.pass, refs::FORGETTING_UNIFORM)
                .param(u.n as f64),
        );
    }
    t
}

pub fn gronwall_table(rows: &[GronwallRow], sourced: bool, summary: &mut Summary) -> Table {
    let mut t = Table::new(&["t", "n", "estimate", "ci_low", "ci_high", "bound", "pass"]);
    let paper_ref = if sourced { refs::HILBERT_SOURCED } else { refs::HILBERT };
    for r in rows {
        t.push(vec![
            fmt_f64(r.t),
            r.n.to_string(),
            fmt_f64(r.estimate.point),
            fmt_f64(r.estimate.ci_low),
            fmt_f64(r.estimate.ci_high),
            fmt_f64(r.bound),
            b(r.pass),
        ]);
        summary.push(
            Check::new("gronwall-moment", r.estimate.point, r.bound, r.pass, paper_ref)
                .at(r.t)
                .param(r.n as f64)
                .ci(&r.estimate),
        );
    }
    t
}
