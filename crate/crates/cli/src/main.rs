//! `kacz`: generate problems, benchmark selection rules, check traces
//! against their rate bounds, and compare with coordinate descent.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{RunArgs, RunConfig};
use crate::error::{CliError, CliResult};

/// Environment variable capping the worker pool size.
const THREADS_ENV: &str = "KACZ_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "kacz",
    version,
    about = "Greedy and randomized Kaczmarz experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a generated system to a directory
    Generate {
        #[arg(long)]
        problem: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run every rule on every seed and write one trace per run
    Bench(RunArgs),
    /// Check runs against the rate bound of each rule
    Validate {
        #[command(flatten)]
        run: RunArgs,
        /// Runs per random rule for the expected-rate check
        #[arg(long)]
        runs: Option<usize>,
        /// Check this trace CSV instead of running the first rule
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Kaczmarz against Gauss-Southwell coordinate descent on the normal equations
    CompareCd(RunArgs),
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Usage(format!(
            "{THREADS_ENV} must be a positive integer, got '{v}'"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn print_json<T: serde::Serialize>(value: &T) -> CliResult<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Generate {
            problem,
            seed,
            out,
            config,
        } => {
            let args = RunArgs {
                problem,
                seeds: seed.into_iter().collect(),
                out,
                config,
                ..RunArgs::default()
            };
            let cfg = RunConfig::resolve(&args, None, false)?;
            print_json(&commands::generate(&cfg)?)
        }
        Command::Bench(args) => {
            let cfg = RunConfig::resolve(&args, None, true)?;
            print_json(&commands::bench(&cfg)?)
        }
        Command::Validate { run, runs, trace } => {
            let cfg = RunConfig::resolve(&run, runs, true)?;
            let report = match &trace {
                Some(path) => commands::validate_trace_file(&cfg, path)?,
                None => commands::validate(&cfg)?,
            };
            commands::write_report(&cfg, &report)?;
            print_json(&report)?;
            if report.passed {
                Ok(())
            } else {
                let failed: Vec<&str> = report
                    .rules
                    .iter()
                    .filter(|r| !r.passed)
                    .map(|r| r.rule.as_str())
                    .collect();
                Err(CliError::Validation(format!(
                    "bound violated for {}",
                    failed.join(", ")
                )))
            }
        }
        Command::CompareCd(args) => {
            let cfg = RunConfig::resolve(&args, None, true)?;
            print_json(&commands::compare_cd(&cfg)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
