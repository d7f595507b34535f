//! `icdqn`: train, evaluate and compare power-control policies.

mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::settings::SystemArgs;

#[derive(Debug, Parser)]
#[command(
    name = "icdqn",
    version,
    about = "Outage-constrained power control experiments"
)]
struct Cli {
    /// Directory for every file a command writes.
    #[arg(
        long,
        global = true,
        env = "ICDQN_OUT_DIR",
        default_value = "icdqn-out"
    )]
    out_dir: PathBuf,
    /// Master seed.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a DQN and write a checkpoint, episode log and manifest.
    Train {
        #[command(flatten)]
        system: SystemArgs,
        /// Ignore the outage constraints in the reward.
        #[arg(long)]
        no_constraint: bool,
        /// Rerun from a manifest written by an earlier `train`.
        #[arg(long, conflicts_with_all = ["config", "no_constraint"])]
        manifest: Option<PathBuf>,
    },
    /// Evaluate a checkpoint and baselines on paired test channels.
    Evaluate {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, required_unless_present = "manifest")]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value_t = icdqn::experiment::DEFAULT_REALIZATIONS)]
        realizations: usize,
        /// Baselines evaluated next to the checkpoint.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "gp,wmmse,random,equal-power"
        )]
        baselines: Vec<String>,
        #[arg(long, conflicts_with_all = ["config", "checkpoint"])]
        manifest: Option<PathBuf>,
    },
    /// Sweep one parameter and compare methods.
    Sweep {
        #[command(flatten)]
        system: SystemArgs,
        /// p-max-db, p0 or users.
        #[arg(long, default_value = "p-max-db")]
        parameter: String,
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            default_value = "0,2,4,6,8,10,12"
        )]
        values: Vec<f64>,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "dqn,dqn-no-constraint,gp,wmmse,random,equal-power"
        )]
        methods: Vec<String>,
        #[arg(long, default_value_t = icdqn::experiment::DEFAULT_REALIZATIONS)]
        realizations: usize,
        /// Read DQN checkpoints instead of training; with training, save them.
        #[arg(long)]
        checkpoint_dir: Option<PathBuf>,
        /// Load DQN checkpoints from --checkpoint-dir rather than training.
        #[arg(long, requires = "checkpoint_dir")]
        no_train: bool,
        /// Rerun exactly from a sweep manifest.
        #[arg(long, conflicts_with = "config")]
        manifest: Option<PathBuf>,
    },
    /// Cross-check the closed-form outage probability against Monte-Carlo.
    VerifyOutage {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        /// Rerun from a manifest written by an earlier run.
        #[arg(long, conflicts_with = "config")]
        manifest: Option<PathBuf>,
    },
    /// Certify the GP solver against exhaustive grid search.
    VerifyGp {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value_t = 20)]
        instances: usize,
        /// Grid levels per user; 200 for two users, 60 for three by default.
        #[arg(long)]
        grid: Option<usize>,
        /// Rerun from a manifest written by an earlier run.
        #[arg(long, conflicts_with = "config")]
        manifest: Option<PathBuf>,
    },
    /// Exhaustive grid search on one random channel.
    Oracle {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value_t = 50)]
        grid: usize,
        /// Ignore the outage constraints.
        #[arg(long)]
        unconstrained: bool,
        /// Rerun from a manifest written by an earlier run.
        #[arg(long, conflicts_with = "config")]
        manifest: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
