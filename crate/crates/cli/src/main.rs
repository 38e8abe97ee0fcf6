mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Train, evaluate and report on resilience-aware feeder switching agents.
#[derive(Debug, Parser)]
#[command(name = "resilgrid", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Feeder description file (default: the bundled 123-node feeder).
    #[arg(long, global = true)]
    pub feeder: Option<PathBuf>,
    /// Environment `key = value` configuration file.
    #[arg(long, global = true)]
    pub env_config: Option<PathBuf>,
    /// Economic parameter file; overrides the environment config's reference.
    #[arg(long, global = true)]
    pub econ_config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train both agents, writing checkpoints and metrics CSVs.
    Train(TrainArgs),
    /// Run greedy evaluation episodes from a checkpoint.
    Evaluate(EvaluateArgs),
    /// Contingency recommendations with economic totals.
    Recommend(RecommendArgs),
    /// Plot-ready data from training metrics.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, default_value_t = 1200)]
    pub episodes: usize,
    #[arg(long, default_value_t = 25)]
    pub update_every: usize,
    #[arg(long, default_value_t = 100)]
    pub checkpoint_interval: usize,
    /// Only write interval checkpoints that improve the 50-episode average.
    #[arg(long)]
    pub save_best: bool,
    /// Number of checkpoints kept on disk.
    #[arg(long, default_value_t = 5)]
    pub keep: usize,
    /// Checkpoint to resume from; an unusable path falls back to a fresh start.
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Checkpoint directory, or a directory of checkpoints (latest is used).
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub episodes: usize,
    /// Steps per episode (default: the economic horizon).
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Scenario name from the library or a scenario file; repeatable
    /// (default: every library scenario).
    #[arg(long)]
    pub scenario: Vec<String>,
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory holding `rewards.csv` and optionally `updates.csv`
    /// (default: the output directory).
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(commands::EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
