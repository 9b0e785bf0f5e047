//! Command-line orchestration of the radial Dirac diagnostics.
//!
//! Every subcommand reads one [`config::RunConfig`], writes its artifacts
//! into the output directory and returns the list of violations found. In
//! assertion mode a nonempty list turns into exit code 1.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifacts;
pub mod bv;
pub mod commands;
pub mod config;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Overrides, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("analysis error: {0}")]
    Analysis(#[from] radial_dirac::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Parser)]
#[command(name = "radial-dirac", version, about = "Spectral diagnostics for radial Dirac operators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Run configuration (JSON).
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output directory; overrides `output_dir`.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads for per-cell parallelism.
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
    /// Seed for random initial directions and instances.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Relative solver tolerance; the absolute one is 1e-2 times this.
    #[arg(long, value_name = "REAL")]
    pub tolerance: Option<f64>,
    /// Exit with code 1 when the analysis finds violations.
    #[arg(long = "assert")]
    pub assert: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Hypothesis reports for the model.
    Hypotheses(Common),
    /// Trajectories of every channel.
    Solve(Common),
    /// R traces, almost-monotone checks and comparability constants.
    Boundedness(Common),
    /// Subordinacy mass ratios.
    Subordinacy(Common),
    /// Discrete eigenvalues by phase shooting.
    Eigen(Common),
    /// Classification map over the (k, lambda) grid.
    Scan(Common),
    /// Bounded-variation inequalities on random instances.
    BvVerify(Common),
    /// Comparison with the WKB reference pair.
    Asymptotics(Common),
    /// Convert JSON artifacts into gnuplot data files.
    Plotdata {
        /// Artifact files written by the other subcommands.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_name = "DIR", default_value = "plots")]
        out: PathBuf,
    },
}

/// Result of one subcommand.
#[derive(Debug, Default)]
pub struct Outcome {
    pub written: Vec<PathBuf>,
    pub violations: Vec<String>,
}

pub fn load(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(&common.config)?;
    cfg.apply(&Overrides {
        out: common.out.clone(),
        workers: common.workers,
        seed: common.seed,
        tolerance: common.tolerance,
    })?;
    Ok(cfg)
}

/// Runs `f` on a pool of the configured size.
fn with_workers<T: Send>(cfg: &RunConfig, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match cfg.workers {
        None => Ok(f()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| CliError::Usage(e.to_string())),
    }
}

type Runner = fn(&RunConfig) -> Result<Outcome, CliError>;

pub fn execute(command: &Command) -> Result<(Outcome, bool), CliError> {
    let (common, run): (&Common, Runner) = match command {
        Command::Plotdata { inputs, out } => return Ok((artifacts::plotdata(inputs, out)?, false)),
        Command::Hypotheses(c) => (c, commands::hypotheses),
        Command::Solve(c) => (c, commands::solve),
        Command::Boundedness(c) => (c, commands::boundedness),
        Command::Subordinacy(c) => (c, commands::subordinacy),
        Command::Eigen(c) => (c, commands::eigen),
        Command::Scan(c) => (c, commands::scan),
        Command::BvVerify(c) => (c, commands::bv_verify),
        Command::Asymptotics(c) => (c, commands::asymptotics),
    };
    let cfg = load(common)?;
    std::fs::create_dir_all(cfg.out_dir())?;
    let outcome = with_workers(&cfg, || run(&cfg))??;
    Ok((outcome, common.assert))
}

/// Exit code 0 on success, 1 on violations in assertion mode, 2 on usage or
/// configuration errors.
pub fn main_with(cli: Cli) -> ExitCode {
    match execute(&cli.command) {
        Ok((outcome, assert)) => {
            for p in &outcome.written {
                println!("wrote {}", p.display());
            }
            for v in &outcome.violations {
                eprintln!("violation: {v}");
            }
            if assert && !outcome.violations.is_empty() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
