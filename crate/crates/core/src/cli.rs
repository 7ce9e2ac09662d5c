//! The `mitplan` command line.
//!
//! Exit codes:
//!
//! | code | meaning                                          |
//! |------|--------------------------------------------------|
//! | 0    | success                                          |
//! | 1    | unreadable input, parse or validation error      |
//! | 2    | scenario cannot be served (aggregate stock short, or no allocation fits the fleet) |
//! | 3    | `check`: some material fails aggregate coverage  |
//! | 4    | `plan`: the plan needs more trucks than the fleet has |
//! | 5    | `oracle`/`compare`: too many allocations to enumerate |
//! | 6    | `compare`: optimizer best differs from the exhaustive best |
//!
//! Every non-zero exit writes one JSON line to stderr.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::cost::{evaluate, CostBreakdown};
use crate::error::Error;
use crate::feasibility::{aggregate_feasible, check_inventory};
use crate::model::{load_scenario, validate_allocation, Allocation, Scenario};
use crate::moea::{optimize, MoeaParams, SolutionRecord};
use crate::oracle::brute_force;
use crate::transport::greedy_plan;
use crate::TOLERANCE;

/// Environment variable capping worker threads (0 = one per core).
pub const THREADS_ENV: &str = "MITPLAN_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Aggregate coverage per material and the shortage report of a baseline split.
    Check,
    /// Transport plan and costs for the allocation given with --alloc.
    Plan,
    /// Evolutionary search for the (PC, TC) front.
    Optimize,
    /// Exhaustive search over every allocation.
    Oracle,
    /// Run optimize and oracle and report the gap.
    Compare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "mitplan", version, about = "Plan production splits and material transfers between factories")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Scenario JSON file.
    pub scenario: PathBuf,
    /// Comma-separated units per factory, e.g. `8,2`.
    #[arg(long = "alloc")]
    pub alloc: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Population size.
    #[arg(long)]
    pub pop: Option<usize>,
    /// Generations.
    #[arg(long)]
    pub gens: Option<usize>,
    /// Crossover probability.
    #[arg(long)]
    pub cx: Option<f64>,
    /// Per-gene mutation probability (default 1/n).
    #[arg(long = "mut")]
    pub mutation: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

/// A fully resolved invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub scenario_path: PathBuf,
    pub allocation: Option<Allocation>,
    pub params: MoeaParams,
    pub output_path: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self, Error> {
        let allocation = cli.alloc.as_deref().map(Allocation::parse).transpose()?;
        match (cli.command, &allocation) {
            (Command::Plan, None) => {
                return Err(Error::validation("alloc", "`plan` requires --alloc"));
            }
            (Command::Oracle, Some(_)) => {
                return Err(Error::validation("alloc", "`oracle` does not accept --alloc"));
            }
            _ => {}
        }
        if cli.format == Format::Csv && !matches!(cli.command, Command::Optimize | Command::Oracle) {
            return Err(Error::validation("format", "csv output is available for optimize and oracle"));
        }
        let defaults = MoeaParams::default();
        let params = MoeaParams {
            population_size: cli.pop.unwrap_or(defaults.population_size),
            generations: cli.gens.unwrap_or(defaults.generations),
            crossover_prob: cli.cx.unwrap_or(defaults.crossover_prob),
            mutation_prob: cli.mutation,
            seed: cli.seed,
            ..defaults
        };
        params.validate()?;
        Ok(RunConfig {
            command: cli.command,
            scenario_path: cli.scenario,
            allocation,
            params,
            output_path: cli.out,
            format: cli.format,
        })
    }
}

/// What a run produced: the report, an exit code, and an optional diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub report: Option<String>,
    pub diagnostic: Option<String>,
}

impl Outcome {
    fn ok(report: String) -> Self {
        Outcome {
            code: 0,
            report: Some(report),
            diagnostic: None,
        }
    }

    fn failed(code: i32, report: Option<String>, kind: &str, message: String) -> Self {
        Outcome {
            code,
            report,
            diagnostic: Some(diagnostic(code, kind, &message)),
        }
    }

    pub fn from_error(e: &Error) -> Self {
        Outcome::failed(exit_code(e), None, error_kind(e), e.to_string())
    }
}

/// Single-line JSON diagnostic.
pub fn diagnostic(code: i32, kind: &str, message: &str) -> String {
    json!({"error": kind, "exit_code": code, "message": message}).to_string()
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Infeasible { .. } | Error::NoFeasibleSolution => 2,
        Error::FleetExceeded { .. } => 4,
        Error::InstanceTooLarge { .. } => 5,
        _ => 1,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Parse(_) => "parse",
        Error::Validation { .. }
        | Error::DimensionMismatch { .. }
        | Error::NegativeEntry { .. }
        | Error::SumMismatch { .. }
        | Error::NegativeQuantity(_)
        | Error::InvalidParams { .. }
        | Error::EmptyFront => "validation",
        Error::Infeasible { .. } => "infeasible",
        Error::NoFeasibleSolution => "no_feasible_solution",
        Error::FleetExceeded { .. } => "fleet_exceeded",
        Error::InstanceTooLarge { .. } => "instance_too_large",
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    text
}

fn front_csv(records: &[SolutionRecord]) -> String {
    let mut out = String::from("allocation,pc,tc,total\n");
    for r in records {
        let alloc = r.allocation.to_string().replace(',', ";");
        writeln!(out, "{alloc},{},{},{}", r.pc, r.tc, r.total).unwrap();
    }
    out
}

fn objective_set(records: &[SolutionRecord]) -> Vec<(f64, f64)> {
    let mut points: Vec<(f64, f64)> = records.iter().map(|r| (r.pc, r.tc)).collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    points.dedup();
    points
}

fn fronts_match(a: &[SolutionRecord], b: &[SolutionRecord]) -> bool {
    let (a, b) = (objective_set(a), objective_set(b));
    a.len() == b.len()
        && a.iter()
            .zip(&b)
            .all(|(p, q)| (p.0 - q.0).abs() <= TOLERANCE && (p.1 - q.1).abs() <= TOLERANCE)
}

/// Executes one command. Does not touch stdout/stderr; see [`Outcome`].
pub fn run(config: &RunConfig) -> Outcome {
    let raw = match std::fs::read(&config.scenario_path) {
        Ok(raw) => raw,
        Err(e) => {
            return Outcome::failed(1, None, "io", format!("{}: {e}", config.scenario_path.display()));
        }
    };
    let scenario = match load_scenario(&raw) {
        Ok(s) => s,
        Err(e) => return Outcome::from_error(&e),
    };
    let outcome = match dispatch(config, &scenario) {
        Ok(outcome) => outcome,
        Err(e) => Outcome::from_error(&e),
    };
    match (&config.output_path, outcome.report) {
        (Some(path), Some(report)) => match std::fs::write(path, report) {
            Ok(()) => Outcome {
                report: None,
                ..outcome
            },
            Err(e) => Outcome::failed(1, None, "io", format!("{}: {e}", path.display())),
        },
        (_, report) => Outcome { report, ..outcome },
    }
}

fn dispatch(config: &RunConfig, s: &Scenario) -> Result<Outcome, Error> {
    match config.command {
        Command::Check => check(config, s),
        Command::Plan => plan(config, s),
        Command::Optimize => {
            let result = optimize(s, &config.params)?;
            Ok(Outcome::ok(match config.format {
                Format::Json => to_json(&result),
                Format::Csv => front_csv(&result.front_records()),
            }))
        }
        Command::Oracle => {
            let result = brute_force(s)?;
            Ok(Outcome::ok(match config.format {
                Format::Json => to_json(&result),
                Format::Csv => front_csv(&result.exact_front),
            }))
        }
        Command::Compare => compare(config, s),
    }
}

fn check(config: &RunConfig, s: &Scenario) -> Result<Outcome, Error> {
    let allocation = match &config.allocation {
        Some(a) => a.clone(),
        None => Allocation::proportional(s.order, &vec![1; s.n()]),
    };
    validate_allocation(s, &allocation)?;
    let feasible = aggregate_feasible(s);
    let report = to_json(&json!({
        "feasible": feasible,
        "allocation": allocation,
        "report": check_inventory(s, &allocation),
    }));
    let short: Vec<&String> = feasible.iter().filter(|(_, ok)| !**ok).map(|(k, _)| k).collect();
    if short.is_empty() {
        Ok(Outcome::ok(report))
    } else {
        Ok(Outcome::failed(
            3,
            Some(report),
            "aggregate_shortage",
            format!("aggregate stock cannot cover the order for {short:?}"),
        ))
    }
}

#[derive(Serialize)]
struct PlanDoc {
    allocation: Allocation,
    plan: crate::transport::PlanReport,
    cost: CostBreakdown,
    fleet_ok: bool,
}

fn plan(config: &RunConfig, s: &Scenario) -> Result<Outcome, Error> {
    let allocation = config.allocation.clone().expect("validated by RunConfig");
    validate_allocation(s, &allocation)?;
    let eval = evaluate(s, &allocation)?;
    let report = to_json(&PlanDoc {
        plan: eval.plan.report(s),
        cost: eval.cost,
        fleet_ok: eval.fleet_ok,
        allocation,
    });
    if eval.fleet_ok {
        Ok(Outcome::ok(report))
    } else {
        let e = greedy_plan(s, config.allocation.as_ref().unwrap()).unwrap_err();
        Ok(Outcome::failed(exit_code(&e), Some(report), error_kind(&e), e.to_string()))
    }
}

fn compare(config: &RunConfig, s: &Scenario) -> Result<Outcome, Error> {
    let moea = optimize(s, &config.params)?;
    let exact = brute_force(s)?;
    let moea_best = moea.best_scalarized.total();
    let gap = moea_best - exact.best_total;
    let moea_front = moea.front_records();
    let report = to_json(&json!({
        "moea_best": moea_front_best(&moea),
        "oracle_best": exact.best(),
        "gap": gap,
        "front_match": fronts_match(&moea_front, &exact.exact_front),
        "moea_front": moea_front,
        "oracle_front": exact.exact_front,
    }));
    if gap.abs() <= TOLERANCE {
        Ok(Outcome::ok(report))
    } else {
        Ok(Outcome::failed(
            6,
            Some(report),
            "gap",
            format!("optimizer best {moea_best} differs from exhaustive best {}", exact.best_total),
        ))
    }
}

fn moea_front_best(result: &crate::moea::ParetoResult) -> SolutionRecord {
    let b = &result.best_scalarized;
    SolutionRecord {
        allocation: b.allocation.clone(),
        pc: b.pc,
        tc: b.tc,
        total: b.total(),
    }
}

/// Worker count from [`THREADS_ENV`]; unset means 0 (one per core).
pub fn threads_from_env() -> Result<usize, Error> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(0),
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::validation(THREADS_ENV, format!("`{v}` is not a non-negative integer"))),
    }
}
