mod commands;
mod failure;
mod io;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use parity_hmm::analysis::DecodeStrategy;
use parity_hmm::models::Role;

use failure::Failure;

/// Leakage detection on repeated parity-check records.
#[derive(Debug, Parser)]
#[command(name = "parity-hmm", version)]
struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "PARITY_HMM_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a dataset from a config file.
    Simulate(SimulateArgs),
    /// Fit a model to a dataset.
    Train(TrainArgs),
    /// Score a dataset with a model.
    Evaluate(EvaluateArgs),
    /// Decoded correlator and fidelity curves, optionally postselected.
    Curves(CurvesArgs),
    /// AIC difference between two fits of the same data.
    Compare(CompareArgs),
    /// Detection onset of the two-state toy model.
    OnsetToy(OnsetArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// TOML (or `.json`) experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the shots per round count.
    #[arg(long)]
    shots: Option<usize>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// JSONL output; a `.summary.json` is written beside it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Model name or model file used as the starting point.
    #[arg(long)]
    model: String,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 15)]
    restarts: usize,
    /// Freeze a parameter, e.g. `--fix p_leak=0.004`. Repeatable.
    #[arg(long = "fix", value_name = "NAME=VALUE")]
    fixes: Vec<String>,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    #[arg(long, default_value_t = 15_000)]
    batch_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Model file output; the fit report goes to `.fit.json` beside it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Evaluation {
    Roc,
    Calibration,
    Lcomp,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(value_enum)]
    what: Evaluation,
    #[arg(long)]
    model: String,
    #[arg(long)]
    data: PathBuf,
    /// Defaults to the model's role.
    #[arg(long)]
    role: Option<Role>,
    #[arg(long, default_value_t = 20)]
    bins: usize,
    /// Seed for the model-sampled reference histogram.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CurvesArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "final")]
    strategy: DecodeStrategy,
    /// `MODEL:ROLE:tpr=0.7` or `MODEL:ROLE:threshold=0.9`. Repeatable.
    #[arg(long = "mitigate", value_name = "SPEC")]
    mitigations: Vec<String>,
    /// Labeled data for tuning TPR thresholds. Without it the input is split
    /// by record index: even records tune, odd records are evaluated.
    #[arg(long)]
    tune_data: Option<PathBuf>,
    /// Append decay fits of ZZ and F.
    #[arg(long)]
    fit: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Fit report (`.fit.json`) of the first model.
    a: PathBuf,
    /// Fit report of the second model.
    b: PathBuf,
}

#[derive(Debug, Args)]
struct OnsetArgs {
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = 1)]
    n_a: usize,
    #[arg(long, default_value_t = 0.01)]
    p_leak: f64,
    #[arg(long, default_value_t = 20)]
    rounds: usize,
    #[arg(long, default_value_t = 10_000)]
    shots: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Command-line flags minus the worker count, which never changes results.
fn recorded_flags(args: impl Iterator<Item = String>) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip_value = false;
    for arg in args {
        if std::mem::take(&mut skip_value) {
            continue;
        }
        if arg == "--threads" {
            skip_value = true;
        } else if !arg.starts_with("--threads=") {
            out.push(arg);
        }
    }
    out
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::input(e.to_string()))?;
    }
    let flags = recorded_flags(std::env::args().skip(1));
    match cli.command {
        Command::Simulate(a) => commands::simulate(a, flags),
        Command::Train(a) => commands::train(a, flags),
        Command::Evaluate(a) => commands::evaluate(a, flags),
        Command::Curves(a) => commands::curves(a, flags),
        Command::Compare(a) => commands::compare(a),
        Command::OnsetToy(a) => commands::onset_toy(a, flags),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
