//! Parameter sweeps over the closed-form model and the simulation-backed
//! validation harness.
//!
//! Grid points are independent and are evaluated in parallel; output order
//! always follows the order of the `SweepSpec` value lists.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::analytic::{self, ChainQuantities, ModelError, ModelParams};
use crate::simulator::{self, SimConfig, SimError, SimStats};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("invalid sweep: {0}")]
    SpecInvalid(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    ThroughputVsPr,
    ThroughputVsUsers,
    DelayVsUsers,
    Validation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub m_values: Vec<u32>,
    /// Used by `ThroughputVsPr` and `Validation`.
    pub pr_values: Vec<f64>,
    /// Used by `ThroughputVsUsers` and `DelayVsUsers`.
    pub u_values: Vec<f64>,
    /// Template for `Validation`; `m`, `pr` are overwritten per point.
    pub sim: Option<SimConfig>,
}

impl SweepSpec {
    pub fn throughput_vs_pr(m_values: Vec<u32>, pr_values: Vec<f64>) -> Self {
        Self {
            kind: SweepKind::ThroughputVsPr,
            m_values,
            pr_values,
            u_values: Vec::new(),
            sim: None,
        }
    }

    pub fn throughput_vs_users(u_values: Vec<f64>, m_values: Vec<u32>) -> Self {
        Self {
            kind: SweepKind::ThroughputVsUsers,
            m_values,
            pr_values: Vec::new(),
            u_values,
            sim: None,
        }
    }

    pub fn delay_vs_users(u_values: Vec<f64>, m_values: Vec<u32>) -> Self {
        Self {
            kind: SweepKind::DelayVsUsers,
            ..Self::throughput_vs_users(u_values, m_values)
        }
    }

    pub fn validation(m_values: Vec<u32>, pr_values: Vec<f64>, sim: SimConfig) -> Self {
        Self {
            kind: SweepKind::Validation,
            m_values,
            pr_values,
            u_values: Vec::new(),
            sim: Some(sim),
        }
    }
}

/// One grid point. `u` and `d` are `inf` when unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub m: u32,
    pub pr: f64,
    pub u: f64,
    pub p0: f64,
    pub pc: f64,
    pub pi1: f64,
    pub pi2: f64,
    pub q: f64,
    pub d: f64,
    pub sim_pi1: Option<f64>,
    pub sim_u: Option<f64>,
    pub ci: Option<f64>,
}

impl SweepRow {
    /// Analytic columns for `(m, pr)`; simulation columns left empty.
    pub fn analytic(m: u32, pr: f64) -> std::result::Result<Self, ModelError> {
        let c = ChainQuantities::evaluate(&ModelParams::new(m, pr)?)?;
        Ok(Self::from_chain(&c))
    }

    pub fn from_chain(c: &ChainQuantities) -> Self {
        Self {
            m: c.params.m(),
            pr: c.params.pr(),
            u: c.occupancy_u,
            p0: c.matrix.p0,
            pc: c.matrix.pc,
            pi1: c.stationary.pi1,
            pi2: c.stationary.pi2,
            q: c.q_mean,
            d: c.delay_d,
            sim_pi1: None,
            sim_u: None,
            ci: None,
        }
    }
}

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(ExperimentError::SpecInvalid(msg.into()))
}

fn require_non_empty<T>(name: &str, values: &[T]) -> Result<()> {
    if values.is_empty() {
        return invalid(format!("{name} must not be empty"));
    }
    Ok(())
}

fn check_occupancy_grid(spec: &SweepSpec) -> Result<()> {
    require_non_empty("u_values", &spec.u_values)?;
    require_non_empty("m_values", &spec.m_values)?;
    if let Some(u) = spec.u_values.iter().find(|u| !(u.is_finite() && **u > 1.0)) {
        return invalid(format!("occupancy values must be finite and > 1 (got {u})"));
    }
    if let Some(m) = spec.m_values.iter().find(|&&m| m < 2) {
        return invalid(format!(
            "user counts must be >= 2 for occupancy sweeps (got {m})"
        ));
    }
    Ok(())
}

fn model_error(e: ModelError) -> ExperimentError {
    ExperimentError::SpecInvalid(e.to_string())
}

/// Throughput against the retransmission probability, one row per
/// `(m, pr)`; rows for a given `m` are ordered by `pr`.
pub fn sweep_throughput_vs_pr(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    require_non_empty("m_values", &spec.m_values)?;
    require_non_empty("pr_values", &spec.pr_values)?;
    if let Some(m) = spec.m_values.iter().find(|&&m| m == 0) {
        return invalid(format!("user counts must be >= 1 (got {m})"));
    }
    if let Some(pr) = spec.pr_values.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
        return invalid(format!("pr values must lie in (0, 1] (got {pr})"));
    }
    let mut prs = spec.pr_values.clone();
    prs.sort_by(f64::total_cmp);
    let points: Vec<(u32, f64)> = spec
        .m_values
        .iter()
        .flat_map(|&m| prs.iter().map(move |&pr| (m, pr)))
        .collect();
    points
        .par_iter()
        .map(|&(m, pr)| SweepRow::analytic(m, pr).map_err(model_error))
        .collect()
}

fn occupancy_rows(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    check_occupancy_grid(spec)?;
    let points: Vec<(f64, u32)> = spec
        .u_values
        .iter()
        .flat_map(|&u| spec.m_values.iter().map(move |&m| (u, m)))
        .collect();
    points
        .par_iter()
        .map(|&(u, m)| {
            let pr = analytic::pr_from_occupancy(u, m).map_err(model_error)?;
            SweepRow::analytic(m, pr).map_err(model_error)
        })
        .collect()
}

/// Throughput against the user count at fixed mean occupancy, one row per
/// `(u, m)` with `pr` chosen so that the occupancy equals `u`.
pub fn sweep_throughput_vs_users(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    occupancy_rows(spec)
}

/// Delay against the user count at fixed mean occupancy.
pub fn sweep_delay(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    occupancy_rows(spec)
}

/// Dispatches the analytic sweep kinds.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    match spec.kind {
        SweepKind::ThroughputVsPr => sweep_throughput_vs_pr(spec),
        SweepKind::ThroughputVsUsers => sweep_throughput_vs_users(spec),
        SweepKind::DelayVsUsers => sweep_delay(spec),
        SweepKind::Validation => invalid("validation sweeps go through validate()"),
    }
}

/// Smallest `pr` at which the throughput for `m` users drops to `level`,
/// by bisection (the throughput is decreasing in `pr` for `m >= 2`).
/// `None` when the level is not crossed on `(0, 1]`.
pub fn throughput_threshold(m: u32, level: f64) -> Option<f64> {
    if m < 2 {
        return None;
    }
    let at = |pr: f64| analytic::throughput(&ModelParams::new(m, pr).ok()?).ok();
    let limit = analytic::asymptotic_throughput_limit(m);
    if level >= limit || level <= 0.0 {
        return None;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if at(mid)? > level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Throughput level used to compare against the published guidance that
/// `pr` should stay at or below 0.3 for ten users.
pub const GUIDANCE_LEVEL: f64 = 0.15;
pub const GUIDANCE_USERS: u32 = 10;
pub const GUIDANCE_PR: f64 = 0.3;

/// Human-readable notes accompanying a sweep.
pub fn sweep_notes(spec: &SweepSpec) -> Vec<String> {
    let mut notes = Vec::new();
    if spec.kind == SweepKind::ThroughputVsPr {
        for &m in &spec.m_values {
            if let Some(pr) = throughput_threshold(m, GUIDANCE_LEVEL) {
                let mut note =
                    format!("throughput falls to {GUIDANCE_LEVEL} at pr = {pr:.4} for m = {m}");
                if m == GUIDANCE_USERS {
                    note.push_str(&format!(
                        "; the published guidance \"pr should not exceed {GUIDANCE_PR}\" \
                         is a coarser reading of this threshold"
                    ));
                }
                notes.push(note);
            }
        }
    }
    if spec.m_values.contains(&1) {
        notes.push("m = 1: occupancy is unbounded (lone user never loses the channel)".into());
    }
    if spec.pr_values.contains(&1.0) && spec.m_values.iter().any(|&m| m >= 2) {
        notes.push("pr = 1 with m >= 2: zero throughput, delay unbounded".into());
    }
    notes
}

/// A formula whose published form was replaced by the form that follows
/// from its own derivation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Erratum {
    pub id: &'static str,
    pub published: &'static str,
    pub implemented: &'static str,
    pub note: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitMismatch {
    pub m: u32,
    pub published: f64,
    pub derived: f64,
}

/// Users counts in `1..=max_m` where `m/2^(m−1)` and `m/(2m−1)` differ.
pub fn limit_mismatches(max_m: u32) -> Vec<LimitMismatch> {
    (1..=max_m)
        .map(|m| LimitMismatch {
            m,
            published: analytic::published_throughput_limit(m),
            derived: analytic::asymptotic_throughput_limit(m),
        })
        .filter(|x| (x.published - x.derived).abs() > 1e-12)
        .collect()
}

pub fn errata(max_m: u32) -> Vec<Erratum> {
    let mismatched: Vec<u32> = limit_mismatches(max_m).iter().map(|x| x.m).collect();
    let range = match (mismatched.first(), mismatched.last()) {
        (Some(a), Some(b)) => format!("m = {a}..={b} ({} values)", mismatched.len()),
        _ => "none".into(),
    };
    vec![
        Erratum {
            id: "low-pr-throughput-limit",
            published: "m / 2^(m-1)",
            implemented: "m / (2m - 1)",
            note: format!(
                "the geometric-sum derivation of the pr -> 0 limit yields m/(2m-1); \
                 the published exponent disagrees for {range} up to m = {max_m}"
            ),
        },
        Erratum {
            id: "throughput-vs-occupancy-exponent",
            published: "1 / (1 - (1 - 1/U)^(m-1))",
            implemented: "pr = 1 - ((U-1)/U)^(1/(m-1)), then the direct throughput",
            note: "inverting U = 1/(1-(1-pr)^(m-1)) requires the exponent 1/(m-1)".into(),
        },
        Erratum {
            id: "expanded-delay-radical",
            published: "expanded delay with a radical term",
            implemented: "D = Q / pi1 = n1 + (pi2/pi1) n2",
            note: "the expanded expression does not follow from Little's law D = Q/pi1".into(),
        },
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PointStatus {
    Pass,
    Fail,
    Degenerate,
}

impl std::fmt::Display for PointStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PointStatus::Pass => "PASS",
            PointStatus::Fail => "FAIL",
            PointStatus::Degenerate => "DEGENERATE",
        })
    }
}

/// Outcome of each agreement check at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct PointChecks {
    pub throughput: bool,
    pub occupancy: bool,
    pub chain: bool,
    pub holding_distribution: bool,
    /// `None` when the fairness check does not apply (m > 20).
    pub fairness: Option<bool>,
}

impl PointChecks {
    pub fn all_pass(&self) -> bool {
        self.throughput
            && self.occupancy
            && self.chain
            && self.holding_distribution
            && self.fairness.unwrap_or(true)
    }

    fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.throughput {
            out.push("throughput");
        }
        if !self.occupancy {
            out.push("occupancy");
        }
        if !self.chain {
            out.push("chain");
        }
        if !self.holding_distribution {
            out.push("holding-distribution");
        }
        if self.fairness == Some(false) {
            out.push("fairness");
        }
        out
    }
}

/// Largest user count at which the fairness check applies.
pub const FAIRNESS_MAX_USERS: u32 = 20;

/// `|busy_fraction − π1| < max(3·CI, 0.005)`.
pub fn throughput_agrees(stats: &SimStats, pi1: f64) -> bool {
    (stats.busy_fraction - pi1).abs() < (3.0 * stats.ci_halfwidth).max(0.005)
}

/// `|mean_holding − U| / U < 0.02`; fails when no holding completed.
pub fn occupancy_agrees(stats: &SimStats, u: f64) -> bool {
    stats
        .mean_holding
        .is_some_and(|h| ((h - u) / u).abs() < 0.02)
}

/// Binomial estimate within three standard errors of `p`.
/// Fails when there were no trials.
pub fn within_three_se(successes: u64, trials: u64, p: f64) -> bool {
    if trials == 0 {
        return false;
    }
    let n = trials as f64;
    let se = (p * (1.0 - p) / n).sqrt();
    (successes as f64 / n - p).abs() <= 3.0 * se
}

pub fn chain_agrees(stats: &SimStats, c: &ChainQuantities) -> bool {
    let t = &stats.transitions;
    within_three_se(t.busy_to_busy, t.from_busy, c.matrix.pc)
        && within_three_se(t.other_to_busy, t.from_other, c.matrix.p0)
}

/// Jain index above 0.99 and every user's share within 10% of `π1/m`.
pub fn fairness_agrees(stats: &SimStats, pi1: f64) -> bool {
    let target = pi1 / stats.per_user_success.len() as f64;
    stats.jain_index > 0.99
        && stats
            .per_user_share()
            .iter()
            .all(|s| (s - target).abs() <= 0.1 * target)
}

pub fn check_point(stats: &SimStats, c: &ChainQuantities) -> PointChecks {
    let pi1 = c.stationary.pi1;
    PointChecks {
        throughput: throughput_agrees(stats, pi1),
        occupancy: occupancy_agrees(stats, c.occupancy_u),
        chain: chain_agrees(stats, c),
        holding_distribution: stats
            .holding_fit(c.matrix.pc)
            .is_some_and(|fit| fit.consistent()),
        fairness: (c.params.m() <= FAIRNESS_MAX_USERS).then(|| fairness_agrees(stats, pi1)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationPoint {
    pub m: u32,
    pub pr: f64,
    pub status: PointStatus,
    /// Analytic and simulated columns; absent when the chain is degenerate.
    pub row: Option<SweepRow>,
    pub checks: Option<PointChecks>,
    pub jain_index: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ValidationTotals {
    pub points: usize,
    pub pass: usize,
    pub fail: usize,
    pub degenerate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub points: Vec<ValidationPoint>,
    pub totals: ValidationTotals,
    pub limit_mismatches: Vec<LimitMismatch>,
    pub errata: Vec<Erratum>,
}

impl ValidationReport {
    /// True iff every non-degenerate point passed.
    pub fn passed(&self) -> bool {
        self.totals.fail == 0
    }
}

/// Largest `m` over which the low-`pr` limit mismatch is tabulated.
pub const ERRATA_MAX_USERS: u32 = 50;

fn validate_point(template: &SimConfig, m: u32, pr: f64) -> Result<ValidationPoint> {
    let degenerate = |detail: String| ValidationPoint {
        m,
        pr,
        status: PointStatus::Degenerate,
        row: None,
        checks: None,
        jain_index: None,
        detail,
    };
    let params = ModelParams::new(m, pr).map_err(model_error)?;
    let chain = match ChainQuantities::evaluate(&params) {
        Ok(c) => c,
        Err(e) => return Ok(degenerate(e.to_string())),
    };
    let mut row = SweepRow::from_chain(&chain);
    if !chain.occupancy_u.is_finite() {
        return Ok(ValidationPoint {
            row: Some(row),
            ..degenerate(ModelError::UnboundedOccupancy.to_string())
        });
    }
    if !chain.delay_d.is_finite() {
        return Ok(ValidationPoint {
            row: Some(row),
            ..degenerate(ModelError::UnboundedDelay.to_string())
        });
    }

    let config = SimConfig { m, pr, ..*template };
    let stats = simulator::run(&config)?;
    row.sim_pi1 = Some(stats.busy_fraction);
    row.sim_u = stats.mean_holding;
    row.ci = Some(stats.ci_halfwidth);
    let checks = check_point(&stats, &chain);
    let failures = checks.failures();
    let (status, detail) = if failures.is_empty() {
        (PointStatus::Pass, String::new())
    } else {
        (
            PointStatus::Fail,
            format!("failed: {}", failures.join(", ")),
        )
    };
    Ok(ValidationPoint {
        m,
        pr,
        status,
        row: Some(row),
        checks: Some(checks),
        jain_index: Some(stats.jain_index),
        detail,
    })
}

/// Simulates every `(m, pr)` grid point and compares against the chain.
pub fn validate(spec: &SweepSpec) -> Result<ValidationReport> {
    let Some(template) = spec.sim else {
        return invalid("validation needs a simulation template");
    };
    require_non_empty("m_values", &spec.m_values)?;
    require_non_empty("pr_values", &spec.pr_values)?;
    if let Some(m) = spec.m_values.iter().find(|&&m| m == 0) {
        return invalid(format!("user counts must be >= 1 (got {m})"));
    }
    if let Some(pr) = spec.pr_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return invalid(format!("pr values must lie in [0, 1] (got {pr})"));
    }
    SimConfig {
        m: 1,
        pr: 0.5,
        ..template
    }
    .validate()?;

    let grid: Vec<(u32, f64)> = spec
        .m_values
        .iter()
        .flat_map(|&m| spec.pr_values.iter().map(move |&pr| (m, pr)))
        .collect();
    let points = grid
        .par_iter()
        .map(|&(m, pr)| validate_point(&template, m, pr))
        .collect::<Result<Vec<_>>>()?;

    let mut totals = ValidationTotals {
        points: points.len(),
        ..Default::default()
    };
    for p in &points {
        match p.status {
            PointStatus::Pass => totals.pass += 1,
            PointStatus::Fail => totals.fail += 1,
            PointStatus::Degenerate => totals.degenerate += 1,
        }
    }
    Ok(ValidationReport {
        points,
        totals,
        limit_mismatches: limit_mismatches(ERRATA_MAX_USERS),
        errata: errata(ERRATA_MAX_USERS),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pr_grid() -> Vec<f64> {
        (1..=99).map(|i| f64::from(i) / 100.0).collect()
    }

    #[test]
    fn throughput_vs_pr_is_strictly_decreasing_for_ten_users() {
        let rows =
            sweep_throughput_vs_pr(&SweepSpec::throughput_vs_pr(vec![10], pr_grid())).unwrap();
        assert_eq!(rows.len(), 99);
        assert!(rows.windows(2).all(|w| w[1].pi1 < w[0].pi1));
    }

    #[test]
    fn ten_user_rows_bracket_the_guidance_level() {
        let rows =
            sweep_throughput_vs_pr(&SweepSpec::throughput_vs_pr(vec![10], pr_grid())).unwrap();
        let at = |pr: f64| rows.iter().find(|r| (r.pr - pr).abs() < 1e-12).unwrap().pi1;
        assert!(at(0.25) > GUIDANCE_LEVEL);
        assert!(at(0.27) < GUIDANCE_LEVEL);
        let threshold = throughput_threshold(10, GUIDANCE_LEVEL).unwrap();
        assert!(threshold > 0.25 && threshold < 0.27, "{threshold}");
    }

    #[test]
    fn throughput_vs_pr_orders_rows_by_pr_within_m() {
        let spec = SweepSpec::throughput_vs_pr(vec![3, 2], vec![0.5, 0.1, 1.0]);
        let rows = sweep(&spec).unwrap();
        let keys: Vec<(u32, f64)> = rows.iter().map(|r| (r.m, r.pr)).collect();
        assert_eq!(
            keys,
            vec![(3, 0.1), (3, 0.5), (3, 1.0), (2, 0.1), (2, 0.5), (2, 1.0)]
        );
        let last = rows.last().unwrap();
        assert_eq!(last.pi1, 0.0);
        assert_eq!(last.d, f64::INFINITY);
    }

    #[test]
    fn sweeps_reject_out_of_domain_values() {
        let bad = [
            SweepSpec::throughput_vs_pr(vec![2], vec![0.0]),
            SweepSpec::throughput_vs_pr(vec![], vec![0.5]),
            SweepSpec::throughput_vs_pr(vec![0], vec![0.5]),
            SweepSpec::throughput_vs_users(vec![1.0], vec![5]),
            SweepSpec::throughput_vs_users(vec![2.0], vec![1]),
            SweepSpec::delay_vs_users(vec![], vec![5]),
            SweepSpec::delay_vs_users(vec![f64::INFINITY], vec![5]),
        ];
        for spec in bad {
            assert!(
                matches!(sweep(&spec), Err(ExperimentError::SpecInvalid(_))),
                "{spec:?}"
            );
        }
    }

    #[test]
    fn throughput_vs_users_examples() {
        let rows = sweep_throughput_vs_users(&SweepSpec::throughput_vs_users(vec![24.0], vec![50]))
            .unwrap();
        assert!((rows[0].pi1 - 0.4996).abs() < 5e-5, "{}", rows[0].pi1);
        assert!((rows[0].u - 24.0).abs() < 1e-9);

        let rows =
            sweep_throughput_vs_users(&SweepSpec::throughput_vs_users(vec![1e6], vec![2])).unwrap();
        assert!((rows[0].pi1 - analytic::asymptotic_throughput_limit(2)).abs() < 1e-3);
    }

    #[test]
    fn throughput_grows_with_occupancy_at_fixed_m() {
        let us = vec![2.0, 4.0, 8.0, 16.0, 24.0];
        for m in [2, 5, 10, 50] {
            let rows =
                sweep_throughput_vs_users(&SweepSpec::throughput_vs_users(us.clone(), vec![m]))
                    .unwrap();
            assert!(rows.windows(2).all(|w| w[0].pi1 < w[1].pi1), "m={m}");
        }
    }

    #[test]
    fn delay_examples() {
        let rows = sweep_delay(&SweepSpec::delay_vs_users(vec![2.0], vec![2])).unwrap();
        assert!((rows[0].d - 5.0).abs() < 1e-12);
        let rows = sweep_delay(&SweepSpec::delay_vs_users(vec![2.0, 16.0], vec![10])).unwrap();
        assert!(rows[1].d <= rows[0].d);
        let ms: Vec<u32> = (2..=50).collect();
        let rows = sweep_delay(&SweepSpec::delay_vs_users(vec![2.0], ms)).unwrap();
        assert!(rows.windows(2).all(|w| w[0].d <= w[1].d));
    }

    #[test]
    fn rows_match_analytic_module_exactly() {
        let rows =
            sweep_throughput_vs_pr(&SweepSpec::throughput_vs_pr(vec![7], vec![0.3])).unwrap();
        let c = ChainQuantities::evaluate(&ModelParams::new(7, 0.3).unwrap()).unwrap();
        assert_eq!(rows[0], SweepRow::from_chain(&c));
        assert_eq!(rows[0].sim_pi1, None);
    }

    #[test]
    fn errata_flag_every_m_from_two() {
        let mism = limit_mismatches(50);
        let ms: Vec<u32> = mism.iter().map(|x| x.m).collect();
        assert_eq!(ms, (2..=50).collect::<Vec<_>>());
        assert_eq!(errata(50).len(), 3);
    }

    #[test]
    fn threshold_edge_cases() {
        assert_eq!(throughput_threshold(1, 0.15), None);
        assert_eq!(throughput_threshold(10, 0.9), None);
        assert_eq!(throughput_threshold(10, 0.0), None);
    }

    #[test]
    fn validation_records_degenerate_points_without_crashing() {
        let sim = SimConfig::new(2, 0.5, 20_000, 5);
        let spec = SweepSpec::validation(vec![1, 2], vec![0.0, 1.0], sim);
        let report = validate(&spec).unwrap();
        assert_eq!(report.totals.points, 4);
        assert_eq!(report.totals.degenerate, 4);
        assert!(report.passed());
        assert!(report
            .points
            .iter()
            .all(|p| p.status == PointStatus::Degenerate));
    }

    #[test]
    fn validation_requires_a_template() {
        let spec = SweepSpec {
            sim: None,
            ..SweepSpec::validation(vec![2], vec![0.5], SimConfig::new(2, 0.5, 100, 1))
        };
        assert!(matches!(
            validate(&spec),
            Err(ExperimentError::SpecInvalid(_))
        ));
        let spec = SweepSpec::validation(
            vec![2],
            vec![0.5],
            SimConfig {
                pt: 0.5,
                ..SimConfig::new(2, 0.5, 100, 1)
            },
        );
        assert!(matches!(
            validate(&spec),
            Err(ExperimentError::Sim(SimError::NotSupported(_)))
        ));
    }

    #[test]
    fn three_se_rule() {
        assert!(within_three_se(500, 1000, 0.5));
        assert!(!within_three_se(600, 1000, 0.5));
        assert!(!within_three_se(0, 0, 0.5));
        assert!(within_three_se(0, 10, 0.0));
        assert!(!within_three_se(1, 10, 0.0));
    }
}
