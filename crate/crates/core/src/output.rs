//! Machine-readable command output: a JSON record or CSV with `#` header
//! comments carrying the same metadata.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::analytic::ChainQuantities;
use crate::experiments::{Erratum, LimitMismatch, SweepRow, ValidationPoint, ValidationTotals};
use crate::simulator::SimStats;

pub const SCHEMA_VERSION: u32 = 1;

/// Column header for analytic sweep tables.
pub const SWEEP_HEADER: &str = "m,pr,u,p0,pc,pi1,pi2,q,d";
/// Column header for validation tables.
pub const VALIDATION_HEADER: &str = "m,pr,u,p0,pc,pi1,pi2,q,d,sim_pi1,sim_u,ci,status";
pub const ANALYZE_HEADER: &str = "m,pr,pt,u,p0,pc,pi1,pi2,q,d,per_user_throughput";
pub const SIMULATE_HEADER: &str = "metric,simulated,analytic";

/// Formats `x` with 10 significant digits, independent of locale.
///
/// Fixed notation is used for decimal exponents in `[-5, 10)`, scientific
/// (`1.5e-7`) otherwise; trailing zeros are trimmed. Non-finite values
/// print as `inf`, `-inf`, `nan`.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.9e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..10).contains(&exp) {
        let decimals = (9 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_sig).unwrap_or_default()
}

/// Closed-form quantities for one point; `None` where the chain is
/// degenerate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyzeRow {
    pub m: u32,
    pub pr: f64,
    pub pt: f64,
    pub u: f64,
    pub p0: f64,
    pub pc: f64,
    pub pi1: Option<f64>,
    pub pi2: Option<f64>,
    pub q: Option<f64>,
    pub d: Option<f64>,
    pub per_user_throughput: Option<f64>,
}

impl AnalyzeRow {
    pub fn from_chain(c: &ChainQuantities) -> Self {
        Self {
            m: c.params.m(),
            pr: c.params.pr(),
            pt: c.params.pt(),
            u: c.occupancy_u,
            p0: c.matrix.p0,
            pc: c.matrix.pc,
            pi1: Some(c.stationary.pi1),
            pi2: Some(c.stationary.pi2),
            q: Some(c.q_mean),
            d: Some(c.delay_d),
            per_user_throughput: Some(c.per_user_throughput),
        }
    }
}

/// Simulation estimates next to the closed-form predictions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateRow {
    pub stats: SimStats,
    pub analytic: Option<SweepRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Row {
    Analyze(AnalyzeRow),
    Simulate(Box<SimulateRow>),
    Sweep(SweepRow),
    Validation(ValidationPoint),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationSummary {
    pub totals: ValidationTotals,
    pub limit_mismatches: Vec<LimitMismatch>,
    pub errata: Vec<Erratum>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputRecord {
    pub schema_version: u32,
    pub command: String,
    /// Every input, including defaults and the resolved seed.
    pub parameters: BTreeMap<String, String>,
    pub rows: Vec<Row>,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<ValidationSummary>,
}

impl OutputRecord {
    pub fn new(command: &str, parameters: BTreeMap<String, String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            parameters,
            rows: Vec::new(),
            warnings: Vec::new(),
            summary: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("record serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# schema_version={}", self.schema_version);
        let _ = writeln!(out, "# command={}", self.command);
        for (k, v) in &self.parameters {
            let _ = writeln!(out, "# param {k}={v}");
        }
        for w in &self.warnings {
            let _ = writeln!(out, "# warning: {w}");
        }
        if let Some(summary) = &self.summary {
            let t = summary.totals;
            let _ = writeln!(
                out,
                "# totals points={} pass={} fail={} degenerate={}",
                t.points, t.pass, t.fail, t.degenerate
            );
            for e in &summary.errata {
                let _ = writeln!(
                    out,
                    "# erratum {}: published {} ; implemented {} ; {}",
                    e.id, e.published, e.implemented, e.note
                );
            }
            for x in &summary.limit_mismatches {
                let _ = writeln!(
                    out,
                    "# limit-mismatch m={} published={} derived={}",
                    x.m,
                    fmt_sig(x.published),
                    fmt_sig(x.derived)
                );
            }
        }
        match self.rows.first() {
            None | Some(Row::Sweep(_)) => {
                out.push_str(SWEEP_HEADER);
                out.push('\n');
            }
            Some(Row::Validation(_)) => {
                out.push_str(VALIDATION_HEADER);
                out.push('\n');
            }
            Some(Row::Analyze(_)) => {
                out.push_str(ANALYZE_HEADER);
                out.push('\n');
            }
            Some(Row::Simulate(_)) => {
                out.push_str(SIMULATE_HEADER);
                out.push('\n');
            }
        }
        for row in &self.rows {
            match row {
                Row::Sweep(r) => out.push_str(&sweep_line(r)),
                Row::Validation(p) => out.push_str(&validation_line(p)),
                Row::Analyze(r) => out.push_str(&analyze_line(r)),
                Row::Simulate(r) => out.push_str(&simulate_lines(r)),
            }
        }
        out
    }
}

fn sweep_fields(r: &SweepRow) -> Vec<String> {
    [r.pr, r.u, r.p0, r.pc, r.pi1, r.pi2, r.q, r.d]
        .into_iter()
        .map(fmt_sig)
        .fold(vec![r.m.to_string()], |mut acc, s| {
            acc.push(s);
            acc
        })
}

fn sweep_line(r: &SweepRow) -> String {
    format!("{}\n", sweep_fields(r).join(","))
}

fn validation_line(p: &ValidationPoint) -> String {
    let mut fields = match &p.row {
        Some(r) => {
            let mut f = sweep_fields(r);
            f.extend([opt(r.sim_pi1), opt(r.sim_u), opt(r.ci)]);
            f
        }
        None => {
            let mut f = vec![p.m.to_string(), fmt_sig(p.pr)];
            f.extend(std::iter::repeat_n(String::new(), 10));
            f
        }
    };
    fields.push(p.status.to_string());
    format!("{}\n", fields.join(","))
}

fn analyze_line(r: &AnalyzeRow) -> String {
    let fields = [
        r.m.to_string(),
        fmt_sig(r.pr),
        fmt_sig(r.pt),
        fmt_sig(r.u),
        fmt_sig(r.p0),
        fmt_sig(r.pc),
        opt(r.pi1),
        opt(r.pi2),
        opt(r.q),
        opt(r.d),
        opt(r.per_user_throughput),
    ];
    format!("{}\n", fields.join(","))
}

fn simulate_lines(r: &SimulateRow) -> String {
    let s = &r.stats;
    let a = r.analytic.as_ref();
    let m = s.per_user_success.len() as f64;
    let mut lines: Vec<(String, String, String)> = vec![
        (
            "measured_slots".into(),
            s.measured_slots.to_string(),
            String::new(),
        ),
        ("idle_slots".into(), s.idle_slots.to_string(), String::new()),
        (
            "success_slots".into(),
            s.success_slots.to_string(),
            String::new(),
        ),
        (
            "collision_slots".into(),
            s.collision_slots.to_string(),
            String::new(),
        ),
        (
            "busy_fraction".into(),
            fmt_sig(s.busy_fraction),
            opt(a.map(|a| a.pi1)),
        ),
        (
            "ci_halfwidth".into(),
            fmt_sig(s.ci_halfwidth),
            String::new(),
        ),
        (
            "mean_holding".into(),
            opt(s.mean_holding),
            opt(a.map(|a| a.u)),
        ),
        (
            "completed_holdings".into(),
            s.completed_holdings.to_string(),
            String::new(),
        ),
        (
            "censored_holdings".into(),
            s.censored_holdings.to_string(),
            String::new(),
        ),
        (
            "pc_hat".into(),
            opt(s.transitions.pc_hat()),
            opt(a.map(|a| a.pc)),
        ),
        (
            "p0_hat".into(),
            opt(s.transitions.p0_hat()),
            opt(a.map(|a| a.p0)),
        ),
        ("jain_index".into(), fmt_sig(s.jain_index), "1".into()),
        (
            "mean_reacquisition_gap".into(),
            opt(s.mean_reacquisition_gap),
            String::new(),
        ),
        (
            "between_replication_variance".into(),
            opt(s.between_replication_variance),
            String::new(),
        ),
    ];
    for (user, share) in s.per_user_share().into_iter().enumerate() {
        lines.push((
            format!("share_user_{user}"),
            fmt_sig(share),
            opt(a.map(|a| a.pi1 / m)),
        ));
    }
    lines
        .into_iter()
        .map(|(k, v, a)| format!("{k},{v},{a}\n"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(fmt_sig(0.5), "0.5");
        assert_eq!(fmt_sig(5.0), "5");
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(f64::INFINITY), "inf");
        assert_eq!(fmt_sig(0.236_670_129_000_135_07), "0.236670129");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.3333333333");
        assert_eq!(fmt_sig(1234.5678901234), "1234.56789");
        assert_eq!(fmt_sig(8.388_607_999_993_367e-13), "8.388608e-13");
        assert_eq!(fmt_sig(1.5e12), "1.5e12");
        assert_eq!(fmt_sig(-2.25), "-2.25");
        assert_eq!(fmt_sig(9.999_999_999_9), "10");
        assert_eq!(fmt_sig(0.01 + 2.0 * 0.01), "0.03");
    }

    #[test]
    fn empty_sweep_record_still_has_header() {
        let rec = OutputRecord::new("sweep", BTreeMap::new());
        let csv = rec.to_csv();
        assert!(csv.ends_with(&format!("{SWEEP_HEADER}\n")));
        assert!(csv.starts_with("# schema_version=1\n"));
    }
}
