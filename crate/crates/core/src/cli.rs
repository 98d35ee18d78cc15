//! Command-line front end.
//!
//! Exit codes: 0 success, 1 validation failure, 2 invalid flags or grids,
//! 3 degenerate model in `analyze`, 4 unsupported simulation option.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analytic::{ChainQuantities, ModelError, ModelParams};
use crate::experiments::{self, ExperimentError, SweepRow, SweepSpec};
use crate::grid::{parse_f64_grid, parse_u32_grid};
use crate::output::{AnalyzeRow, OutputRecord, Row, SimulateRow, ValidationSummary};
use crate::simulator::{self, SimConfig, SimError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_NOT_SUPPORTED: i32 = 4;

pub const SEED_ENV: &str = "CONTENTION_LAB_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "contention-lab",
    version,
    about = "Cooperative slotted ALOHA: closed-form chain analysis and Monte Carlo cross-checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form quantities for one (users, pr) point.
    Analyze(AnalyzeArgs),
    /// Run the slot-level simulator and compare against the closed form.
    Simulate(SimulateArgs),
    /// Analytic parameter sweeps (plot-ready tables).
    Sweep(SweepArgs),
    /// Simulate a grid and check agreement with the closed form.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    ThroughputVsPr,
    ThroughputVsUsers,
    Delay,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::ThroughputVsPr => "throughput-vs-pr",
            Kind::ThroughputVsUsers => "throughput-vs-users",
            Kind::Delay => "delay",
        }
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub users: u32,
    #[arg(long)]
    pub pr: f64,
    #[arg(long, default_value_t = 1.0)]
    pub pt: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long, default_value_t = 1_000_000)]
    pub slots: u64,
    /// Defaults to 1% of slots, at least 1000.
    #[arg(long)]
    pub warmup: Option<u64>,
    #[arg(long, env = SEED_ENV, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub replications: u32,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub users: u32,
    #[arg(long)]
    pub pr: f64,
    #[arg(long, default_value_t = 1.0)]
    pub pt: f64,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    /// User-count grid; defaults to 2,5,10,20,50 (throughput-vs-pr) or 2:50.
    #[arg(long)]
    pub users: Option<String>,
    /// Retransmission-probability grid; default 0.01:0.99:0.01.
    #[arg(long = "pr-grid")]
    pub pr_grid: Option<String>,
    /// Occupancy grid; default 2,4,8,16,24.
    #[arg(long)]
    pub u: Option<String>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, default_value = "2,10")]
    pub users: String,
    #[arg(long = "pr-grid", default_value = "0.1,0.5")]
    pub pr_grid: String,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

pub const DEFAULT_PR_USERS: &str = "2,5,10,20,50";
pub const DEFAULT_PR_GRID: &str = "0.01:0.99:0.01";
pub const DEFAULT_OCCUPANCY_USERS: &str = "2:50";
pub const DEFAULT_U_GRID: &str = "2,4,8,16,24";

/// Result of one command: rendered text plus exit code, or an error
/// message with its exit code.
#[derive(Debug)]
pub struct Outcome {
    pub record: Option<OutputRecord>,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub code: i32,
    pub error: Option<String>,
}

impl Outcome {
    fn fail(code: i32, msg: impl Into<String>) -> Self {
        Self {
            record: None,
            format: Format::Csv,
            output: None,
            code,
            error: Some(msg.into()),
        }
    }

    fn done(record: OutputRecord, out: &OutputArgs, code: i32) -> Self {
        Self {
            record: Some(record),
            format: out.format,
            output: out.output.clone(),
            code,
            error: None,
        }
    }

    pub fn rendered(&self) -> Option<String> {
        self.record.as_ref().map(|r| match self.format {
            Format::Csv => r.to_csv(),
            Format::Json => r.to_json(),
        })
    }
}

fn params(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

fn format_name(f: Format) -> String {
    match f {
        Format::Csv => "csv".into(),
        Format::Json => "json".into(),
    }
}

pub fn analyze(args: &AnalyzeArgs) -> Outcome {
    let echo = params(&[
        ("users", args.users.to_string()),
        ("pr", args.pr.to_string()),
        ("pt", args.pt.to_string()),
        ("format", format_name(args.out.format)),
    ]);
    let model = match ModelParams::with_pt(args.users, args.pr, args.pt) {
        Ok(p) => p,
        Err(e) => return Outcome::fail(EXIT_USAGE, e.to_string()),
    };
    let mut record = OutputRecord::new("analyze", echo);
    let mut code = EXIT_OK;
    match ChainQuantities::evaluate(&model) {
        Ok(c) => {
            if !c.occupancy_u.is_finite() {
                record
                    .warnings
                    .push(ModelError::UnboundedOccupancy.to_string());
                code = EXIT_DEGENERATE;
            }
            if !c.delay_d.is_finite() {
                record.warnings.push(ModelError::UnboundedDelay.to_string());
                code = EXIT_DEGENERATE;
            }
            record.rows.push(Row::Analyze(AnalyzeRow::from_chain(&c)));
        }
        Err(e) => {
            let t = crate::analytic::transition_probabilities(&model);
            record.warnings.push(e.to_string());
            record.rows.push(Row::Analyze(AnalyzeRow {
                m: model.m(),
                pr: model.pr(),
                pt: model.pt(),
                u: f64::INFINITY,
                p0: t.p0,
                pc: t.pc,
                pi1: None,
                pi2: None,
                q: None,
                d: None,
                per_user_throughput: None,
            }));
            code = EXIT_DEGENERATE;
        }
    }
    if model.pt() != 1.0 {
        record
            .warnings
            .push("pt does not enter the saturated model and is only echoed".into());
    }
    Outcome::done(record, &args.out, code)
}

fn sim_config(m: u32, pr: f64, pt: f64, sim: &SimArgs) -> SimConfig {
    SimConfig {
        m,
        pr,
        pt,
        slots: sim.slots,
        warmup: sim
            .warmup
            .unwrap_or_else(|| simulator::default_warmup(sim.slots)),
        seed: sim.seed,
        replications: sim.replications,
    }
}

fn sim_echo(config: &SimConfig) -> Vec<(&'static str, String)> {
    vec![
        ("slots", config.slots.to_string()),
        ("warmup", config.warmup.to_string()),
        ("seed", config.seed.to_string()),
        ("replications", config.replications.to_string()),
    ]
}

fn sim_error(e: &SimError) -> Outcome {
    match e {
        SimError::NotSupported(_) => Outcome::fail(EXIT_NOT_SUPPORTED, e.to_string()),
        SimError::ConfigInvalid(_) => Outcome::fail(EXIT_USAGE, e.to_string()),
    }
}

pub fn simulate(args: &SimulateArgs) -> Outcome {
    let config = sim_config(args.users, args.pr, args.pt, &args.sim);
    let mut echo = vec![
        ("users", args.users.to_string()),
        ("pr", args.pr.to_string()),
        ("pt", args.pt.to_string()),
        ("format", format_name(args.out.format)),
    ];
    echo.extend(sim_echo(&config));
    let stats = match simulator::run(&config) {
        Ok(s) => s,
        Err(e) => return sim_error(&e),
    };
    let mut record = OutputRecord::new("simulate", params(&echo));
    let analytic = match SweepRow::analytic(config.m, config.pr) {
        Ok(row) => {
            if !row.u.is_finite() {
                record
                    .warnings
                    .push(ModelError::UnboundedOccupancy.to_string());
            }
            if !row.d.is_finite() {
                record.warnings.push(ModelError::UnboundedDelay.to_string());
            }
            Some(row)
        }
        Err(e) => {
            record.warnings.push(e.to_string());
            None
        }
    };
    if stats.mean_holding.is_none() {
        record.warnings.push(format!(
            "no holding completed in the measurement window ({} censored)",
            stats.censored_holdings
        ));
    }
    record
        .rows
        .push(Row::Simulate(Box::new(SimulateRow { stats, analytic })));
    Outcome::done(record, &args.out, EXIT_OK)
}

pub fn sweep(args: &SweepArgs) -> Outcome {
    let users = args.users.clone().unwrap_or_else(|| {
        match args.kind {
            Kind::ThroughputVsPr => DEFAULT_PR_USERS,
            _ => DEFAULT_OCCUPANCY_USERS,
        }
        .to_string()
    });
    let m_values = match parse_u32_grid(&users) {
        Ok(v) => v,
        Err(e) => return Outcome::fail(EXIT_USAGE, format!("--users: {e}")),
    };
    let mut echo = vec![
        ("kind", args.kind.name().to_string()),
        ("users", users),
        ("format", format_name(args.out.format)),
    ];
    let spec = match args.kind {
        Kind::ThroughputVsPr => {
            let grid = args
                .pr_grid
                .clone()
                .unwrap_or_else(|| DEFAULT_PR_GRID.into());
            let prs = match parse_f64_grid(&grid) {
                Ok(v) => v,
                Err(e) => return Outcome::fail(EXIT_USAGE, format!("--pr-grid: {e}")),
            };
            echo.push(("pr-grid", grid));
            SweepSpec::throughput_vs_pr(m_values, prs)
        }
        Kind::ThroughputVsUsers | Kind::Delay => {
            let grid = args.u.clone().unwrap_or_else(|| DEFAULT_U_GRID.into());
            let us = match parse_f64_grid(&grid) {
                Ok(v) => v,
                Err(e) => return Outcome::fail(EXIT_USAGE, format!("--u: {e}")),
            };
            echo.push(("u", grid));
            if args.kind == Kind::Delay {
                SweepSpec::delay_vs_users(us, m_values)
            } else {
                SweepSpec::throughput_vs_users(us, m_values)
            }
        }
    };
    let rows = match experiments::sweep(&spec) {
        Ok(r) => r,
        Err(e) => return Outcome::fail(EXIT_USAGE, e.to_string()),
    };
    let mut record = OutputRecord::new("sweep", params(&echo));
    record.warnings = experiments::sweep_notes(&spec);
    record.rows = rows.into_iter().map(Row::Sweep).collect();
    Outcome::done(record, &args.out, EXIT_OK)
}

pub fn validate(args: &ValidateArgs) -> Outcome {
    let m_values = match parse_u32_grid(&args.users) {
        Ok(v) => v,
        Err(e) => return Outcome::fail(EXIT_USAGE, format!("--users: {e}")),
    };
    let prs = match parse_f64_grid(&args.pr_grid) {
        Ok(v) => v,
        Err(e) => return Outcome::fail(EXIT_USAGE, format!("--pr-grid: {e}")),
    };
    let template = sim_config(1, 0.5, 1.0, &args.sim);
    let mut echo = vec![
        ("users", args.users.clone()),
        ("pr-grid", args.pr_grid.clone()),
        ("format", format_name(args.out.format)),
    ];
    echo.extend(sim_echo(&template));
    let spec = SweepSpec::validation(m_values, prs, template);
    let report = match experiments::validate(&spec) {
        Ok(r) => r,
        Err(ExperimentError::Sim(e)) => return sim_error(&e),
        Err(e) => return Outcome::fail(EXIT_USAGE, e.to_string()),
    };
    let mut record = OutputRecord::new("validate", params(&echo));
    for p in &report.points {
        if !p.detail.is_empty() {
            record
                .warnings
                .push(format!("m={} pr={}: {} {}", p.m, p.pr, p.status, p.detail));
        }
    }
    for e in &report.errata {
        record.warnings.push(format!(
            "erratum {}: published {} replaced by {}",
            e.id, e.published, e.implemented
        ));
    }
    let code = if report.passed() {
        EXIT_OK
    } else {
        EXIT_VALIDATION_FAILED
    };
    record.summary = Some(ValidationSummary {
        totals: report.totals,
        limit_mismatches: report.limit_mismatches,
        errata: report.errata,
    });
    record.rows = report.points.into_iter().map(Row::Validation).collect();
    Outcome::done(record, &args.out, code)
}

pub fn dispatch(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
        Command::Validate(a) => validate(a),
    }
}

/// Parses `args`, runs the command, writes output, and returns the exit
/// code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = dispatch(&cli);
    if let Some(err) = &outcome.error {
        eprintln!("error: {err}");
    }
    if let Some(text) = outcome.rendered() {
        match &outcome.output {
            Some(path) => {
                if let Err(e) = std::fs::write(path, text) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return EXIT_USAGE;
                }
            }
            None => print!("{text}"),
        }
    }
    outcome.code
}
