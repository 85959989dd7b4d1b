//! `netwave` — simulate wave dynamics on networks, deterministically or
//! with randomized edge batches, solve boundary control problems, and run
//! the Monte Carlo studies behind the convergence tables.
//!
//! Every command reads a TOML configuration (see `fixtures/` at the
//! repository root for the schema) and writes one machine-readable
//! document — CSV by default, JSON with `--format json` — to `--out` or
//! stdout. Human-oriented progress lines go to stderr, so stdout can
//! always be piped. Exit codes: 0 on success, 2 when a document or
//! argument fails validation, 3 when a solve fails numerically.

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod emit;

pub use emit::Format;

#[derive(Parser)]
#[command(
    name = "netwave",
    version,
    about = "Wave dynamics, randomized batch simulation, and optimal boundary control on networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the deterministic dynamics once.
    ///
    /// Uses the first step size in the configuration's `steps` list. The
    /// report lists grid sizes, wall time, and the final energy; with
    /// --export-trajectory the output is the displacement field table
    /// instead.
    Simulate(SimulateArgs),
    /// Run the randomized dynamics once and compare against the
    /// deterministic reference.
    ///
    /// Samples one edge-subset realization from --seed, runs it over the
    /// same grids as `simulate`, and reports relative errors against the
    /// deterministic solution.
    RbmSimulate(RbmSimulateArgs),
    /// Solve the optimal boundary control problem for the deterministic
    /// dynamics.
    ///
    /// Requires `control = "optimize"` and a `target` in the
    /// configuration. Outputs the optimal control samples per controlled
    /// vertex; with --export-trajectory, the optimally driven
    /// displacement field.
    Ocp(OcpArgs),
    /// Solve the optimal control problem for one sampled realization of
    /// the randomized dynamics.
    Rocp(RocpArgs),
    /// Monte Carlo study: randomized vs deterministic dynamics across the
    /// configured step sizes.
    ///
    /// For each step size, runs one deterministic reference and
    /// `realizations` randomized runs, and emits mean/std rows for wall
    /// times, their ratio, and the relative state errors.
    StudyForward(StudyArgs),
    /// Monte Carlo study: randomized vs deterministic optimal controls
    /// across the configured step sizes.
    ///
    /// For each step size, solves the deterministic control problem once
    /// and the randomized one per realization, and emits rows for times,
    /// the optimality gap, control errors, and driven-state errors.
    StudyControl(StudyArgs),
    /// Monte Carlo validation of the characteristic-deviation bounds.
    ///
    /// Traces randomized characteristics on every edge of the configured
    /// network and checks their mean-square deviation from the
    /// deterministic ones, and the matching exit-time deviation, against
    /// the theoretical step-size bounds.
    ValidateLemmas(LemmaArgs),
    /// Parse a configuration or network document and report what it
    /// describes.
    ParseCheck(ParseCheckArgs),
}

/// Flags shared by every command: the input document and where/how to
/// write the output document.
#[derive(Args)]
struct IoArgs {
    /// Configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Write the output document to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output document format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    io: IoArgs,
    /// Output the displacement field over time instead of the run report.
    #[arg(long)]
    export_trajectory: bool,
}

#[derive(Args)]
struct RbmSimulateArgs {
    #[command(flatten)]
    io: IoArgs,
    /// Seed for sampling the edge-subset realization.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output the displacement field over time instead of the run report.
    #[arg(long)]
    export_trajectory: bool,
}

#[derive(Args)]
struct OcpArgs {
    #[command(flatten)]
    io: IoArgs,
    /// Output the optimally driven displacement field instead of the
    /// control samples.
    #[arg(long)]
    export_trajectory: bool,
}

#[derive(Args)]
struct RocpArgs {
    #[command(flatten)]
    io: IoArgs,
    /// Seed for sampling the edge-subset realization the solve uses.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output the optimally driven displacement field (under the sampled
    /// realization) instead of the control samples.
    #[arg(long)]
    export_trajectory: bool,
}

#[derive(Args)]
struct StudyArgs {
    #[command(flatten)]
    io: IoArgs,
    /// Override the configuration's study seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configuration's number of Monte Carlo realizations.
    #[arg(long)]
    realizations: Option<usize>,
}

#[derive(Args)]
struct LemmaArgs {
    #[command(flatten)]
    io: IoArgs,
    /// Base seed for the Monte Carlo samples.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monte Carlo samples per edge and step size.
    #[arg(long, default_value_t = 10_000)]
    realizations: usize,
}

#[derive(Args)]
struct ParseCheckArgs {
    #[command(flatten)]
    io: IoArgs,
}

/// Failures split by exit code: configuration and argument problems exit
/// with 2, numerical solver failures with 3.
#[derive(Debug)]
enum CliError {
    Validation(String),
    Solver(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(msg) | CliError::Solver(msg) => f.write_str(msg),
        }
    }
}

impl From<netwave::Error> for CliError {
    fn from(e: netwave::Error) -> Self {
        match e {
            netwave::Error::Validation(v) => CliError::Validation(v.to_string()),
            netwave::Error::Solver(s) => CliError::Solver(s.to_string()),
        }
    }
}

impl From<netwave::ValidationError> for CliError {
    fn from(e: netwave::ValidationError) -> Self {
        CliError::Validation(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => commands::simulate(&args),
        Command::RbmSimulate(args) => commands::rbm_simulate(&args),
        Command::Ocp(args) => commands::ocp(&args),
        Command::Rocp(args) => commands::rocp(&args),
        Command::StudyForward(args) => commands::study_forward(&args),
        Command::StudyControl(args) => commands::study_control(&args),
        Command::ValidateLemmas(args) => commands::validate_lemmas(&args),
        Command::ParseCheck(args) => commands::parse_check(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
