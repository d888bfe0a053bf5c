//! Command-line surface over the detection workbench.
//!
//! Five verbs cover the workflow end to end: `simulate` writes labeled
//! dwell datasets, `train` fits a marginal detection network, `calibrate`
//! solves a detector threshold for a false alarm target, `evaluate` runs
//! sweep/replicate experiments into report CSVs, and `inspect` dumps one
//! record as a plot-ready table.
//!
//! Runs are reproducible: configs are TOML with canonical defaults, the
//! master seed resolves as `--seed` over `CLUTTERLAB_SEED` over the
//! config file, and every command writes a `<out>.manifest.toml` echoing
//! the command line, the fully resolved config, versions, and timings.
//! Data outputs are byte-stable under a fixed seed; the manifest is the
//! one file that is not (it contains wall-clock timings).
//!
//! Exit codes: 0 success, 1 validation error, 2 runtime failure, 3
//! calibration that completed but missed its target.

mod calibrate;
mod config;
mod detector;
mod evaluate;
mod inspect;
mod manifest;
mod simulate;
mod train;

pub use config::{
    Axis, CalibrateFile, EvaluateFile, SimulateFile, ThresholdFile, TrainFile, ValidationSplit,
};
pub use detector::{DetectorEngine, DetectorSpec};
pub use manifest::{RunManifest, Timings};

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Failure category carrying the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, config, or referenced inputs; nothing was written.
    Validation(String),
    /// The run itself failed after its inputs checked out.
    Runtime(String),
    /// Calibration finished and wrote its outputs but missed the target.
    NotAchieved(String),
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::NotAchieved(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Runtime(m) | CliError::NotAchieved(m) => {
                f.write_str(m)
            }
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Core error found while checking inputs, before any output exists.
pub(crate) fn validation_error(e: clutterlab_core::Error) -> CliError {
    CliError::Validation(e.to_string())
}

/// Core error raised after side effects may have started.
pub(crate) fn runtime_error(e: clutterlab_core::Error) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Ambient information shared by every command.
pub struct RunContext {
    /// Exact argv, echoed into the manifest.
    pub argv: Vec<String>,
    /// Seed from `--seed` or `CLUTTERLAB_SEED`, precedence already
    /// applied; `None` leaves the config file's seeds in force.
    pub seed_override: Option<u64>,
}

#[derive(Debug, Parser)]
#[command(
    name = "clutterlab",
    version,
    about = "Simulate radar dwells, train and calibrate multi-target detectors, and evaluate them"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a labeled dwell dataset file.
    Simulate(SimulateArgs),
    /// Train a per-axis detection network and write a checkpoint.
    Train(TrainArgs),
    /// Solve a detector threshold for a false alarm rate target.
    Calibrate(CalibrateArgs),
    /// Run a sweep/replicate experiment and write the report CSV.
    Evaluate(EvaluateArgs),
    /// Dump one dataset record as a plot-ready CSV.
    Inspect(InspectArgs),
}

/// Flags shared by the config-driven verbs.
#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Run description (TOML).
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Primary output path.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Master seed; wins over CLUTTERLAB_SEED and the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Cap on worker threads.
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Detection axis of the network; wins over the config's `mode`.
    #[arg(long, value_enum)]
    pub mode: Option<Axis>,
    /// Continue from this checkpoint up to the configured epoch total.
    #[arg(long, value_name = "PATH")]
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    /// Dataset file to read.
    #[arg(value_name = "DATASET")]
    pub dataset: PathBuf,
    /// Record index within the dataset.
    #[arg(long, default_value_t = 0)]
    pub index: u64,
    /// Output CSV path.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Accepted for interface uniformity; inspection draws nothing.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Cap on worker threads.
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
}

/// Process entry point: parses the real argv and environment.
pub fn run() -> i32 {
    let argv: Vec<String> = std::env::args().collect();
    let env_seed = std::env::var("CLUTTERLAB_SEED").ok();
    run_from(argv, env_seed.as_deref())
}

/// Testable entry point taking the argv and the `CLUTTERLAB_SEED` value
/// explicitly. Returns the process exit code.
pub fn run_from(argv: Vec<String>, env_seed: Option<&str>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli.command, argv, env_seed) {
        Ok(()) => 0,
        Err(err) => {
            match &err {
                CliError::NotAchieved(msg) => eprintln!("warning: {msg}"),
                other => eprintln!("error: {other}"),
            }
            err.exit_code()
        }
    }
}

fn dispatch(command: Command, argv: Vec<String>, env_seed: Option<&str>) -> CliResult<()> {
    match command {
        Command::Simulate(args) => {
            apply_threads(args.common.threads)?;
            let ctx = context(argv, args.common.seed, env_seed)?;
            simulate::run(&args, &ctx)
        }
        Command::Train(args) => {
            apply_threads(args.common.threads)?;
            let ctx = context(argv, args.common.seed, env_seed)?;
            train::run(&args, &ctx)
        }
        Command::Calibrate(args) => {
            apply_threads(args.common.threads)?;
            let ctx = context(argv, args.common.seed, env_seed)?;
            calibrate::run(&args, &ctx)
        }
        Command::Evaluate(args) => {
            apply_threads(args.common.threads)?;
            let ctx = context(argv, args.common.seed, env_seed)?;
            evaluate::run(&args, &ctx)
        }
        Command::Inspect(args) => {
            apply_threads(args.threads)?;
            let ctx = context(argv, args.seed, env_seed)?;
            inspect::run(&args, &ctx)
        }
    }
}

fn context(argv: Vec<String>, flag: Option<u64>, env_seed: Option<&str>) -> CliResult<RunContext> {
    Ok(RunContext {
        seed_override: resolve_seed(flag, env_seed)?,
        argv,
    })
}

fn resolve_seed(flag: Option<u64>, env_seed: Option<&str>) -> CliResult<Option<u64>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match env_seed {
        None => Ok(None),
        Some(raw) => raw.trim().parse::<u64>().map(Some).map_err(|_| {
            CliError::validation(format!(
                "CLUTTERLAB_SEED must be an unsigned 64-bit integer, got {raw:?}"
            ))
        }),
    }
}

fn apply_threads(threads: Option<usize>) -> CliResult<()> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(CliError::validation("--threads must be at least 1"));
    }
    // The cap is per process; a second in-process invocation keeps the
    // pool of the first and the call below becomes a no-op.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}
