use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rmgd_core::bandit::DEFAULT_PROB_FLOOR;
use rmgd_core::trainer::Beta;

use crate::config::Overrides;

#[derive(Debug, Parser)]
#[command(name = "rmgd", version, about = "Resizable mini-batch gradient descent experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train with the batch size chosen by the bandit every epoch.
    Rmgd(TrainArgs),
    /// Train with one fixed batch size.
    Mgd {
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long)]
        batch_size: Option<usize>,
    },
    /// Train one fixed-batch run per arm.
    Grid {
        #[command(flatten)]
        train: TrainArgs,
        /// Worker threads; arms run concurrently when above 1.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
        parallel: u16,
        /// Only plan the per-arm iteration counts.
        #[arg(long)]
        dry_run: bool,
    },
    /// Simulate the bandit against a synthetic cost environment.
    Regret(RegretArgs),
    /// Turn an epoch log into a CSV of choices and arm probabilities.
    EmitTrace(TraceArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Comma-separated batch sizes, strictly increasing.
    #[arg(long, value_delimiter = ',')]
    pub arms: Option<Vec<usize>>,
    /// A number in (0, 1) or `auto`.
    #[arg(long)]
    pub beta: Option<Beta>,
    /// Continue from this checkpoint, truncating the epoch log to match.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    /// Include per-epoch wall time in the epoch log.
    #[arg(long)]
    pub log_wall_time: bool,
}

impl TrainArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            output: self.output.clone(),
            epochs: self.epochs,
            arms: self.arms.clone(),
            beta: self.beta,
            batch_size: None,
            checkpoint_every: self.checkpoint_every,
            log_wall_time: self.log_wall_time,
        }
    }
}

#[derive(Debug, Args)]
pub struct RegretArgs {
    /// Bernoulli cost means, one per arm.
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.6,0.6,0.6,0.6,0.6")]
    pub means: Vec<f64>,
    /// Use a rigged environment with this many arms instead: `--winner`
    /// always succeeds, the rest always fail.
    #[arg(long, conflicts_with = "means")]
    pub rigged: Option<usize>,
    #[arg(long, default_value_t = 0, requires = "rigged")]
    pub winner: usize,
    #[arg(long, value_delimiter = ',', default_value = "10000")]
    pub horizons: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub repeats: usize,
    /// A number in (0, 1) or `auto` (chosen per horizon).
    #[arg(long, default_value = "auto")]
    pub beta: Beta,
    #[arg(long, default_value_t = DEFAULT_PROB_FLOOR)]
    pub prob_floor: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "runs/regret")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    /// Epoch log written by `rmgd`.
    #[arg(long)]
    pub log: PathBuf,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}
