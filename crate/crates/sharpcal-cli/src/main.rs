//! `sharpcal` — calibration and sharpness diagnostics for probabilistic
//! forecast scenarios.
//!
//! The binary is a thin, reproducible front end over the library: every
//! subcommand reads JSON inputs, runs one diagnostic, embeds a manifest
//! (command, input digests, seeds, tolerances, timestamp) in its report,
//! and prints a one-line summary.  Stochastic subcommands demand an
//! explicit seed; nothing is ever seeded from the clock.

mod commands;
mod failure;
mod manifest;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use output::Format;

#[derive(Parser)]
#[command(
    name = "sharpcal",
    version,
    about = "Calibration and sharpness diagnostics for probabilistic forecast scenarios",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a scenario file and check every construction invariant.
    Validate(ValidateArgs),
    /// Scenario-file utilities.
    #[command(subcommand)]
    Scenario(ScenarioCommand),
    /// Run one diagnostic and write its report.
    #[command(subcommand)]
    Run(RunCommand),
}

#[derive(Subcommand)]
enum ScenarioCommand {
    /// Build a scenario file from a compact family description.
    Build(BuildArgs),
}

#[derive(Subcommand)]
enum RunCommand {
    /// Grid residuals of the time-averaged composition of truth cdf and
    /// forecast quantile.
    Calibration(CalibrationArgs),
    /// Randomized PIT sample: uniformity verdict and histogram.
    Pit(PitArgs),
    /// Variance gap, both decompositions, and the equality condition.
    Sharpness(SharpnessArgs),
    /// The two variance decompositions, optionally checked by simulation.
    Decompose(DecomposeArgs),
    /// Averaged squared-quantile profile over the unit interval.
    Theta(ThetaArgs),
    /// Block-repeat the scenario to growing horizons and track margins.
    Asymptotic(AsymptoticArgs),
    /// Search for the sharpest calibrated forecasts over given truths.
    Probe(ProbeArgs),
    /// Tabulate equality condition versus gap across scenario files.
    Scan(ScanArgs),
}

#[derive(Args)]
pub struct ValidateArgs {
    /// Scenario JSON file to check.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Write the validation report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct BuildArgs {
    /// Family description JSON file.
    #[arg(long)]
    pub spec: PathBuf,
    /// Write the scenario file here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct CalibrationArgs {
    /// Scenario JSON file.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Interior grid size (default 512).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Calibration tolerance (default: per-scenario; see also
    /// SHARPCAL_DEFAULT_TOL).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report rendering.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Args)]
pub struct PitArgs {
    /// Scenario JSON file.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Sample size.
    #[arg(long)]
    pub n: usize,
    /// Seed of the sampling stream (required: no clock seeding).
    #[arg(long)]
    pub seed: u64,
    /// Histogram bins (default 20).
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report rendering; csv emits the histogram.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Args)]
pub struct SharpnessArgs {
    /// Scenario JSON file.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Interior grid size for the calibration check (default 512).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Calibration tolerance (default: per-scenario; see also
    /// SHARPCAL_DEFAULT_TOL).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report rendering (json only).
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Args)]
pub struct DecomposeArgs {
    /// Scenario JSON file.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Simulation sample size; enables the simulated cross-check.
    #[arg(long, requires = "seed")]
    pub n: Option<usize>,
    /// Seed of the simulation stream (required with --n).
    #[arg(long, requires = "n")]
    pub seed: Option<u64>,
    /// Level bins for conditional statistics (default 20).
    #[arg(long, requires = "n")]
    pub bins: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report rendering; csv emits the conditional matrix (needs --n).
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Args)]
pub struct ThetaArgs {
    /// Scenario JSON file (bounded-support forecasts only).
    #[arg(long)]
    pub scenario: PathBuf,
    /// Interior grid size (default 128).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report rendering.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Args)]
pub struct AsymptoticArgs {
    /// Base scenario JSON file; each checkpoint block-repeats it.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Comma-separated strictly increasing horizons, e.g. 2,8,32,128.
    #[arg(long)]
    pub checkpoints: String,
    /// Interior grid size for profiles and residuals (default 256).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report rendering.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Args)]
pub struct ProbeArgs {
    /// Search configuration JSON file:
    /// {"truths": [...], "budget": ..., "seed": ..., "basis_size": ...}.
    #[arg(long)]
    pub config: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report rendering (json only).
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Args)]
pub struct ScanArgs {
    /// Scenario JSON files, one --scenario per row.
    #[arg(long = "scenario", required = true)]
    pub scenarios: Vec<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report rendering.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command_line = std::iter::once("sharpcal".to_string())
        .chain(std::env::args().skip(1))
        .collect::<Vec<_>>()
        .join(" ");
    let result = match &cli.command {
        Command::Validate(args) => commands::cmd_validate(args, &command_line),
        Command::Scenario(ScenarioCommand::Build(args)) => {
            commands::cmd_build(args, &command_line)
        }
        Command::Run(run) => match run {
            RunCommand::Calibration(args) => commands::cmd_calibration(args, &command_line),
            RunCommand::Pit(args) => commands::cmd_pit(args, &command_line),
            RunCommand::Sharpness(args) => commands::cmd_sharpness(args, &command_line),
            RunCommand::Decompose(args) => commands::cmd_decompose(args, &command_line),
            RunCommand::Theta(args) => commands::cmd_theta(args, &command_line),
            RunCommand::Asymptotic(args) => commands::cmd_asymptotic(args, &command_line),
            RunCommand::Probe(args) => commands::cmd_probe(args, &command_line),
            RunCommand::Scan(args) => commands::cmd_scan(args, &command_line),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
