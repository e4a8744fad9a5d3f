//! The `detmax` command line.
//!
//! Exit codes: 0 on success, 1 when an invariant check fails, 2 on bad input.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::checks::{self, CheckReport, SuiteParams, SUITES};
use crate::error::Error;
use crate::format::{parse_instance, InstanceFile};
use crate::gen::files;
use crate::instance::Instance;
use crate::local_search::{solve_with, SolveConfig, SolveReport};
use crate::oracle::{brute_force_opt, OracleMode, OracleResult};
use crate::sparsify::DEFAULT_FW_ITERS;

#[derive(Parser, Debug)]
#[command(
    name = "detmax",
    version,
    about = "Determinant maximization under matroid constraints"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run local search on an instance file and print the report as JSON.
    Solve(SolveArgs),
    /// Brute-force optimum over all bases.
    Oracle(OracleArgs),
    /// Run invariant checks on an instance file or on generated suites.
    Verify(VerifyArgs),
    /// Print a generated instance file.
    Gen(GenArgs),
    /// Solve every instance matching a glob and print a table.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
pub struct SolverFlags {
    /// Skip the support sparsification stage.
    #[arg(long)]
    pub no_sparsify: bool,
    /// Iteration cap (default: derived from the instance).
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Longest cycle searched, in forward arcs (default: the dimension).
    #[arg(long)]
    pub max_half_len: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_FW_ITERS)]
    pub fw_iters: usize,
}

impl SolverFlags {
    fn config(&self) -> SolveConfig {
        SolveConfig {
            max_iters: self.max_iters,
            use_sparsify: !self.no_sparsify,
            max_half_len: self.max_half_len,
            fw_iters: self.fw_iters,
        }
    }
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    pub path: PathBuf,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Write the exchange graph of every iteration to this file as JSON.
    #[arg(long)]
    pub dump_graph: Option<PathBuf>,
    /// Add the brute-force optimum and the gap to the report.
    #[arg(long)]
    pub with_oracle: bool,
    /// Use exact rational determinants for the oracle.
    #[arg(long)]
    pub exact_oracle: bool,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    pub path: PathBuf,
    #[arg(long)]
    pub exact_oracle: bool,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Instance file to check; without it, `--suite` selects generated suites.
    pub path: Option<PathBuf>,
    /// Suite name, or `all`.
    #[arg(long, conflicts_with = "path")]
    pub suite: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Largest matrix order in the permanent-bound suite.
    #[arg(long, default_value_t = 6)]
    pub lmax: usize,
    /// Corrupt an arc weight to exercise the failure path.
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    RandomUniform,
    RandomPartition,
    Nsw,
    Network,
    AdversarialCollinear,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub kind: GenKind,
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    /// Rank (uniform and network kinds).
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long, default_value_t = 3)]
    pub parts: usize,
    #[arg(long, default_value_t = 2)]
    pub players: usize,
    #[arg(long, default_value_t = 4)]
    pub items: usize,
    #[arg(long, default_value_t = 6)]
    pub vertices: usize,
    /// Edges beyond a spanning tree (network kind).
    #[arg(long, default_value_t = 4)]
    pub extra: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Glob pattern of instance files.
    pub pattern: String,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Add the brute-force optimum where the enumeration guard allows.
    #[arg(long)]
    pub with_oracle: bool,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    pub format: TableFormat,
}

/// Parses arguments, runs the command and maps errors to exit codes.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 1 for a violated runtime invariant, 2 for everything caused by the input.
fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::Postcondition(_)) => 1,
        _ => 2,
    }
}

pub fn run(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Solve(a) => solve(a),
        Command::Oracle(a) => {
            let instance = load(&a.path)?;
            print_json(&oracle(&instance, a.exact_oracle)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify(a) => verify(a),
        Command::Gen(a) => {
            let text = generate(&a)?.to_json();
            println!("{text}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench(a) => bench(a),
    }
}

fn load(path: &Path) -> anyhow::Result<Instance> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_instance(&text).with_context(|| format!("invalid instance {}", path.display()))
}

fn print_json(value: &impl Serialize) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn oracle(instance: &Instance, exact: bool) -> anyhow::Result<OracleResult> {
    let mode = if exact {
        OracleMode::Exact
    } else {
        OracleMode::Float
    };
    Ok(brute_force_opt(instance, mode)?)
}

fn solve(a: SolveArgs) -> anyhow::Result<ExitCode> {
    let instance = load(&a.path)?;
    let mut graphs = Vec::new();
    let dump = a.dump_graph.is_some();
    let report = solve_with(&instance, &a.solver.config(), |_, _, g| {
        if dump {
            graphs.push(g.to_json());
        }
    })?;
    if let Some(path) = &a.dump_graph {
        fs::write(path, serde_json::to_string_pretty(&graphs)?)
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    let mut out = serde_json::to_value(&report)?;
    if a.with_oracle {
        let opt = oracle(&instance, a.exact_oracle)?;
        out["oracle"] = oracle_summary(&opt, &report);
    }
    print_json(&out)?;
    Ok(ExitCode::SUCCESS)
}

/// `ln OPT - ln ALG`; 0 when both are zero.
fn gap_ln(opt: &OracleResult, report: &SolveReport) -> Option<f64> {
    match (opt.log_det_ln, report.log_det_ln) {
        (None, None) => Some(0.0),
        (Some(o), Some(s)) => Some(o - s),
        _ => None,
    }
}

fn oracle_summary(opt: &OracleResult, report: &SolveReport) -> Value {
    json!({
        "best_set": opt.best_set,
        "log_det_ln": opt.log_det_ln,
        "bases_enumerated": opt.bases_enumerated,
        "mode": opt.mode,
        "gap_ln": gap_ln(opt, report),
    })
}

fn verify(a: VerifyArgs) -> anyhow::Result<ExitCode> {
    let reports: Vec<CheckReport> = match (&a.path, &a.suite) {
        (Some(path), _) => checks::verify_instance(&load(path)?, a.seed, a.inject_fault)?,
        (None, Some(suite)) => {
            let params = SuiteParams {
                trials: a.trials,
                seed: a.seed,
                lmax: a.lmax,
                inject_fault: a.inject_fault,
            };
            let names: Vec<&str> = if suite == "all" {
                SUITES.to_vec()
            } else {
                vec![suite.as_str()]
            };
            names
                .into_iter()
                .map(|n| checks::run_suite(n, &params))
                .collect::<crate::Result<_>>()?
        }
        (None, None) => return Err(anyhow!("give an instance file or --suite")),
    };
    let passed = reports.iter().all(|r| r.passed);
    print_json(&json!({ "passed": passed, "checks": reports }))?;
    for r in reports.iter().filter(|r| !r.passed) {
        eprintln!("invariant violated: {}: {}", r.name, r.detail);
    }
    Ok(if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn generate(a: &GenArgs) -> anyhow::Result<InstanceFile> {
    let file = match a.kind {
        GenKind::RandomUniform => files::random_uniform(a.seed, a.n, a.d, a.r.unwrap_or(a.d))?,
        GenKind::RandomPartition => files::random_partition_file(a.seed, a.n, a.d, a.parts)?,
        GenKind::Nsw => files::nsw(a.seed, a.players, a.items)?,
        GenKind::Network => files::network(a.seed, a.vertices, a.extra, a.r)?,
        GenKind::AdversarialCollinear => files::adversarial_collinear(a.n, a.d)?,
    };
    Ok(file)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct BenchRow {
    pub file: String,
    pub n: Option<usize>,
    pub d: Option<usize>,
    pub r: Option<usize>,
    pub iterations: Option<usize>,
    pub wall_ms: Option<f64>,
    pub log_det_ln: Option<f64>,
    pub oracle_log_det_ln: Option<f64>,
    pub gap_ln: Option<f64>,
    pub error: Option<String>,
}

fn bench_one(path: &Path, config: &SolveConfig, with_oracle: bool) -> BenchRow {
    let mut row = BenchRow {
        file: path.display().to_string(),
        ..BenchRow::default()
    };
    let instance = match load(path) {
        Ok(i) => i,
        Err(e) => {
            row.error = Some(format!("{e:#}"));
            return row;
        }
    };
    row.n = Some(instance.n());
    row.d = Some(instance.dim());
    row.r = Some(instance.rank());
    let start = Instant::now();
    let report = match solve_with(&instance, config, |_, _, _| {}) {
        Ok(r) => r,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    row.iterations = Some(report.iterations);
    row.log_det_ln = report.log_det_ln;
    if with_oracle {
        match brute_force_opt(&instance, OracleMode::Float) {
            Ok(opt) => {
                row.oracle_log_det_ln = opt.log_det_ln;
                row.gap_ln = gap_ln(&opt, &report);
            }
            // over the enumeration guard: leave the oracle columns empty
            Err(Error::GuardExceeded(_)) => {}
            Err(e) => row.error = Some(e.to_string()),
        }
    }
    row
}

fn bench(a: BenchArgs) -> anyhow::Result<ExitCode> {
    let mut paths: Vec<PathBuf> = glob::glob(&a.pattern)
        .with_context(|| format!("bad glob pattern {:?}", a.pattern))?
        .filter_map(|p| p.ok())
        .collect();
    paths.sort();
    let config = a.solver.config();
    let rows: Vec<BenchRow> = paths
        .par_iter()
        .map(|p| bench_one(p, &config, a.with_oracle))
        .collect();
    match a.format {
        TableFormat::Json => print_json(&rows)?,
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(std::io::stdout().lock());
            if rows.is_empty() {
                // the header alone
                w.write_record([
                    "file",
                    "n",
                    "d",
                    "r",
                    "iterations",
                    "wall_ms",
                    "log_det_ln",
                    "oracle_log_det_ln",
                    "gap_ln",
                    "error",
                ])?;
            }
            for row in &rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
