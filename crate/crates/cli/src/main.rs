mod commands;
mod config;
mod output;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use stopsum_core::Error;

use crate::commands::Ctx;
use crate::config::{Command, Params, RunConfig};
use crate::output::OutDir;

const EXIT_FAILED_CHECK: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_ERROR_BUDGET: u8 = 3;
const EXIT_USAGE: u8 = 64;

/// Local probabilities of randomly stopped sums, their asymptotic regimes,
/// and clustering in power-law random intersection graphs.
#[derive(Parser)]
#[command(name = "stopsum", version, arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Sub,

    /// Seed for every random stream of the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "STOPSUM_WORKERS")]
    workers: Option<usize>,
    /// JSON run configuration; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    plots: bool,
}

#[derive(Subcommand)]
enum Sub {
    /// Truncated power-law lattice law as `t,prob`.
    Dist(Params),
    /// Exact law of a stopped sum and its ratio to the regime predictor.
    Stopsum(Params),
    /// Which asymptotic regime applies.
    Regimes(Params),
    /// Run a named verification scenario, or `all`.
    Verify {
        scenario: String,
        #[command(flatten)]
        params: Params,
    },
    /// Local limit theorem error `tau_n`.
    Llt(Params),
    /// Large deviation bound ratios.
    Bounds(Params),
    /// Model clustering curve `C*(k)`.
    Clustering(Params),
    /// Sample an intersection graph and estimate clustering.
    Rig(Params),
}

impl Sub {
    fn split(self) -> (Command, Option<String>, Params) {
        match self {
            Sub::Dist(p) => (Command::Dist, None, p),
            Sub::Stopsum(p) => (Command::Stopsum, None, p),
            Sub::Regimes(p) => (Command::Regimes, None, p),
            Sub::Verify { scenario, params } => (Command::Verify, Some(scenario), params),
            Sub::Llt(p) => (Command::Llt, None, p),
            Sub::Bounds(p) => (Command::Bounds, None, p),
            Sub::Clustering(p) => (Command::Clustering, None, p),
            Sub::Rig(p) => (Command::Rig, None, p),
        }
    }
}

/// Flags laid over the optional config file.
fn resolve(cli: Cli) -> Result<(RunConfig, Option<usize>)> {
    let (command, scenario, params) = cli.command.split();
    let base = match &cli.config {
        Some(path) => {
            let file = RunConfig::load(path)?;
            if file.command != command {
                bail!(
                    "config is for `{}` but `{}` was requested",
                    file.command.name(),
                    command.name()
                );
            }
            Some(file)
        }
        None => None,
    };
    let config = RunConfig {
        command,
        scenario: scenario.or_else(|| base.as_ref().and_then(|b| b.scenario.clone())),
        params: params.over(base.as_ref().map(|b| b.params.clone()).unwrap_or_default()),
        out: cli
            .out
            .or_else(|| base.as_ref().map(|b| b.out.clone()))
            .unwrap_or_else(|| PathBuf::from("stopsum-out")),
        seed: cli.seed.or(base.as_ref().map(|b| b.seed)).unwrap_or(0),
        emit_plots: cli.plots || base.as_ref().is_some_and(|b| b.emit_plots),
    };
    config.validate()?;
    Ok((config, cli.workers))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(
            Error::ErrorBudget { .. }
            | Error::Budget { .. }
            | Error::TruncationTooSmall { .. }
            | Error::SupportOverflow { .. },
        ) => EXIT_ERROR_BUDGET,
        Some(
            Error::InvalidParameter(_)
            | Error::NonConvergentNormalization { .. }
            | Error::UnboundedTailError { .. }
            | Error::DegenerateLaw(_)
            | Error::LatticeSpan { .. }
            | Error::DivergentMoment { .. }
            | Error::UndefinedPoint(_)
            | Error::Precondition(_)
            | Error::Unsupported(_),
        ) => EXIT_VALIDATION,
        _ => EXIT_FAILED_CHECK,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let (config, workers) = match resolve(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    let workers = workers
        .filter(|&w| w > 0)
        .unwrap_or_else(stopsum_core::rng::default_workers);
    let run = || -> Result<bool> {
        let mut out = OutDir::open(&config.out, config.emit_plots)?;
        let passed = commands::run(&Ctx { config: &config, workers }, &mut out)?;
        out.finish(&config, if passed { "pass" } else { "fail" })?;
        Ok(passed)
    };
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAILED_CHECK),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
