//! Scenario-driven front end: runs multiple-scale approximations and the
//! direct-integration reference on declarative scenario files, emitting CSV
//! trajectories, trace-distance series, static SVG plots and a run manifest.
//!
//! Exit codes: 0 success, 1 I/O or internal failure, 2 scenario parse or
//! validation error, 3 dimension mismatch, 4 defective generator,
//! 5 polynomial secular term.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod output;
mod runner;
mod scenario;
mod svg;

/// Errors surfaced to the process boundary.
#[derive(Debug)]
pub enum CliError {
    /// Scenario text or semantic validation problem.
    Parse(String),
    /// Propagated numerical-core error.
    Core(multiscale::Error),
    /// Filesystem problem.
    Io(String),
}

impl CliError {
    pub fn in_context(self, what: &str) -> CliError {
        match self {
            CliError::Parse(msg) => CliError::Parse(format!("{what}: {msg}")),
            other => other,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Core(multiscale::Error::DimensionMismatch(_)) => 3,
            CliError::Core(multiscale::Error::DefectiveGenerator { .. }) => 4,
            CliError::Core(multiscale::Error::PolynomialSecularTerm { .. }) => 5,
            _ => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Parse(msg) => write!(f, "scenario error: {msg}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<multiscale::Error> for CliError {
    fn from(e: multiscale::Error) -> Self {
        match e {
            // validation-class core errors are scenario problems
            multiscale::Error::InvalidLevel(_)
            | multiscale::Error::InvalidGrid(_)
            | multiscale::Error::NotPhysical(_) => CliError::Parse(e.to_string()),
            other => CliError::Core(other),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "multiscale",
    about = "Multiple-scale dynamical maps for time-local master equations",
    after_help = "Exit codes: 0 ok, 1 internal/I-O, 2 parse/validation, 3 dimension \
                  mismatch, 4 defective generator, 5 polynomial secular term."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario: build the expansion, evaluate all requested levels,
    /// optionally integrate the reference, and write artifacts.
    Run(RunArgs),
    /// List the bundled scenarios.
    List,
    /// Parse and validate a scenario without running it.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Bundled scenario name or path to a scenario file.
    #[arg(long)]
    scenario: String,
    /// Output directory for CSV, SVG and manifest artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the expansion order.
    #[arg(long)]
    order: Option<usize>,
    /// Override the truncation levels, comma separated (e.g. "s1,1,s2,2").
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<String>>,
    /// Skip SVG emission.
    #[arg(long)]
    no_plots: bool,
    /// Tolerance override as key=value; repeatable.
    #[arg(long = "tolerance", value_parser = parse_key_value)]
    tolerance: Vec<(String, f64)>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Bundled scenario name or path to a scenario file.
    #[arg(long)]
    scenario: String,
}

fn parse_key_value(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let value: f64 = v.parse().map_err(|e| format!("value in `{s}`: {e}"))?;
    Ok((k.to_string(), value))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::List => {
            for (name, _) in scenario::BUNDLED {
                println!("{name}");
            }
            Ok(())
        }
        Command::Validate(args) => {
            let s = scenario::load(&args.scenario)?;
            let tol = s.tolerances()?;
            s.resolve(&tol)?;
            println!("ok: scenario `{}` is valid", s.name);
            Ok(())
        }
        Command::Run(args) => {
            let opts = runner::RunOptions {
                scenario_ref: args.scenario,
                out_dir: args.out,
                order_override: args.order,
                levels_override: args.levels,
                no_plots: args.no_plots,
                tolerance_overrides: args.tolerance,
            };
            let outcome = runner::run(&opts)?;
            println!(
                "ran `{}`: {} grid points, levels [{}]",
                outcome.scenario.name,
                outcome.times.len(),
                outcome
                    .levels
                    .iter()
                    .map(|l| l.level.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            );
            for path in &outcome.artifacts {
                println!("  wrote {}", path.display());
            }
            Ok(())
        }
    }
}
