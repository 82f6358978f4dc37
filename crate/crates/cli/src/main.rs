//! `conslaw`: run, audit and inspect monotone finite-volume experiments.

// Negated comparisons are deliberate: they reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration, arguments or input files. Exit code 2.
    Config(String),
    /// CFL failure or numerical breakdown. Exit code 3.
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

impl From<conslaw_core::Error> for CliError {
    fn from(e: conslaw_core::Error) -> Self {
        use conslaw_core::Error as E;
        match e {
            E::Cfl { .. }
            | E::NonFinite(_)
            | E::DegenerateStates(_)
            | E::UnboundedBelow { .. }
            | E::LegendreDomain { .. }
            | E::InvalidBreakpoints
            | E::OracleSize { .. }
            | E::RateFitInput => CliError::Runtime(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("io: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Config(format!("csv: {e}"))
    }
}

#[derive(Parser, Debug)]
#[command(name = "conslaw", version, about = "Lyapunov decay experiments for scalar conservation laws")]
struct Cli {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set grid.n=800`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evolve and audit every configured functional for monotone decay.
    Verify {
        /// Run this many consecutive seeds starting at `data.seed`, in parallel.
        #[arg(long)]
        sweep: Option<u64>,
        /// Audit an existing report CSV instead of running.
        #[arg(long, conflicts_with = "sweep")]
        report: Option<PathBuf>,
    },
    /// Evolve and write the report and final field without auditing.
    Evolve,
    /// Project a field onto a target set and report the L2 distance.
    Project {
        /// `x_center,u` CSV; defaults to the configured initial data.
        #[arg(long)]
        input: Option<PathBuf>,
        /// One of monotone, interval, l1ball, l2ball; defaults to the first
        /// configured target.
        #[arg(long)]
        target: Option<String>,
    },
    /// Sample the exact Riemann fan.
    Riemann,
    /// Measure the L1 convergence rate against a closed-form solution.
    Convergence,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(match e {
                CliError::Config(_) => 2,
                CliError::Runtime(_) => 3,
            })
        }
    }
}

/// Returns whether every audit passed.
fn dispatch(cli: Cli) -> Result<bool, CliError> {
    let mut cfg = ExperimentConfig::load(cli.config.as_deref(), &cli.overrides)?;
    if let Some(out) = &cli.out {
        cfg.output.dir = out.to_string_lossy().into_owned();
    }
    let out = PathBuf::from(&cfg.output.dir);
    match cli.command {
        Command::Verify { report: Some(path), .. } => commands::audit_report_file(&cfg, &path),
        Command::Verify { sweep: Some(n), .. } => commands::sweep(&cfg, &out, n),
        Command::Verify { .. } => commands::evolve(&cfg, &out, true),
        Command::Evolve => commands::evolve(&cfg, &out, false).map(|_| true),
        Command::Project { input, target } => commands::project(&cfg, &out, input.as_deref(), target.as_deref()),
        Command::Riemann => commands::riemann(&cfg, &out),
        Command::Convergence => commands::convergence(&cfg, &out),
    }
}
