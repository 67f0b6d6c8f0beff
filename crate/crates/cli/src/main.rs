//! Benchmark and verification command line for the charging scheduler.
//!
//! `focs bench` runs seeded experiment sweeps and writes summary medians
//! (and optionally per-run records) as CSV or JSON. `focs verify` runs one
//! of the self-check suites and prints one line per check.
//!
//! Exit codes: 0 on success, 1 on a solver or I/O error, 2 on a
//! verification failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use focs_core::{
    emit_per_run, emit_results, run_experiment, run_suite, DataSource, ExperimentConfig,
    MethodChoice, OutputFormat, RunOptions, StartMode, Variant, VerifySuite,
};

#[derive(Parser)]
#[command(name = "focs", about = "Flow-based EV charging scheduler benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark sweep and write median runtimes.
    Bench(BenchArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct BenchArgs {
    /// Number of charging sessions per instance.
    #[arg(long)]
    n: usize,
    /// Time granularity in seconds (60, 900, 1800 or 3600).
    #[arg(long)]
    granularity: u32,
    /// Max-flow method: sap, ek, pp, dinitz, or all.
    #[arg(long, default_value = "sap")]
    method: MethodChoice,
    /// Scheduler variant: focs or focs-pm.
    #[arg(long, default_value = "focs")]
    variant: Variant,
    /// Horizon start: full-day or noon.
    #[arg(long, default_value = "full-day")]
    start: StartMode,
    /// Independent repetitions per method.
    #[arg(long, default_value_t = 10)]
    runs: usize,
    /// Base seed; run k uses seed + k.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Session CSV to sample from, or `synthetic`.
    #[arg(long, default_value = "synthetic")]
    data: String,
    /// Output file for the summary.
    #[arg(long)]
    out: PathBuf,
    /// Output format: csv or json.
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
    /// Also write the raw per-run records next to the summary
    /// (`<out>.per-run.<ext>`).
    #[arg(long)]
    per_run: bool,
    /// Run repetitions serially instead of on a worker pool.
    #[arg(long)]
    serial: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite to run: golden, oracle or properties.
    #[arg(long)]
    suite: VerifySuite,
    /// Base seed for the randomized suites.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// `out.csv` -> `out.per-run.csv`; extensionless paths get a plain suffix.
fn per_run_path(out: &Path) -> PathBuf {
    match out.extension().and_then(|e| e.to_str()) {
        Some(ext) => out.with_extension(format!("per-run.{ext}")),
        None => out.with_extension("per-run"),
    }
}

fn bench(args: &BenchArgs) -> anyhow::Result<()> {
    let cfg = ExperimentConfig {
        n: args.n,
        granularity_s: args.granularity,
        method: args.method,
        variant: args.variant,
        start: args.start,
        runs: args.runs,
        seed: args.seed,
        data: match args.data.as_str() {
            "synthetic" => DataSource::Synthetic,
            path => DataSource::Path(PathBuf::from(path)),
        },
    };
    let summary = run_experiment(&cfg, RunOptions { serial: args.serial })?;
    emit_results(&summary, &args.out, args.format)?;
    if args.per_run {
        emit_per_run(&summary, &per_run_path(&args.out), args.format)?;
    }
    for row in &summary.rows {
        eprintln!(
            "{} n={} g={}s {}/{}: median build {:.6}s solve {:.6}s total {:.6}s",
            row.method,
            row.n,
            row.granularity_s,
            row.variant,
            row.start,
            row.median_build_s,
            row.median_solve_s,
            row.median_total_s
        );
    }
    Ok(())
}

fn verify(args: &VerifyArgs) -> bool {
    let report = run_suite(args.suite, args.seed);
    for check in &report.checks {
        if check.passed {
            println!("PASS {}::{}", report.suite, check.name);
        } else {
            println!("FAIL {}::{}: {}", report.suite, check.name, check.detail);
        }
    }
    report.passed()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Bench(args) => match bench(&args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        },
        Command::Verify(args) => {
            if verify(&args) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
    }
}
