//! `bihtrans`: solve, verify and study the biharmonic transmission problem from a TOML config.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use bihtrans_core::{Error, RouteChoice};
use clap::{Parser, Subcommand, ValueEnum};

use commands::{Context, Overrides};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("output error: {0}")]
    Output(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Output(_) => 1,
            CliError::Core(e) => match e {
                Error::Parse(_)
                | Error::InvalidInput(_)
                | Error::InvalidGeometry(_)
                | Error::DimensionMismatch { .. }
                | Error::Resolution { .. }
                | Error::Io(_)
                | Error::Csv(_) => 2,
                Error::Asymmetric(_)
                | Error::HypothesisViolation { .. }
                | Error::Decomposition(_) => 3,
                _ => 1,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RouteArg {
    Block,
    Calculus,
    Both,
}

impl From<RouteArg> for RouteChoice {
    fn from(r: RouteArg) -> Self {
        match r {
            RouteArg::Block => RouteChoice::Block,
            RouteArg::Calculus => RouteChoice::Calculus,
            RouteArg::Both => RouteChoice::Both,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "bihtrans",
    version,
    about = "Biharmonic transmission problem on a two-piece cylinder"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `[output] dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Interface route; overrides `[solver] route`.
    #[arg(long, global = true, value_enum)]
    route: Option<RouteArg>,
    /// Grid points per piece for the particular solutions; overrides `[solver] nx`.
    #[arg(long, global = true)]
    nx: Option<usize>,
    /// Seed for `boundary.kind = "random"`.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve and write solution slices and the residual report.
    Solve,
    /// Solve, compare against the direct oracle and check the operator identities.
    Verify,
    /// Scan the determinant symbol for positivity.
    ScanSymbols,
    /// Refinement study against the manufactured solution.
    Convergence,
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let config = cli
        .config
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let ctx = Context::new(
        &config,
        Overrides {
            out: cli.out,
            route: cli.route.map(Into::into),
            nx: cli.nx,
            seed: cli.seed,
        },
    )?;
    match cli.command {
        Command::Solve => commands::solve(&ctx),
        Command::Verify => commands::verify(&ctx),
        Command::ScanSymbols => commands::scan_symbols(&ctx),
        Command::Convergence => commands::convergence(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(4),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
