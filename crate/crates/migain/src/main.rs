use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use migain::commands::{self, GlobalOpts};

/// Gain-based co-training and forecast elicitation experiments.
#[derive(Parser)]
#[command(name = "migain", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Directory for output files (defaults to the working directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for parallel sweeps; 0 picks automatically.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Run everything sequentially with fixed-order reductions.
    #[arg(long, global = true)]
    deterministic: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic factored prior and write it as JSON.
    GenPrior {
        #[arg(long)]
        config: PathBuf,
    },
    /// Estimate mutual information from sampled tasks (or score a fixed
    /// forecast fixture) and emit a CSV ladder.
    EstimateMi {
        #[arg(long)]
        config: PathBuf,
    },
    /// Maximize the gain (or a scoring-rule gain) and write the result plus a
    /// learning curve.
    Cotrain {
        #[arg(long)]
        config: PathBuf,
    },
    /// Sweep a payment mechanism for truthfulness and (multi-task) focality.
    Mechanism {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check a prior: identity residual, stability, grid uniqueness.
    VerifyPrior {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = if cli.deterministic { 1 } else { cli.threads };
    if threads > 0 {
        // A second initialization (e.g. in tests) is harmless to ignore.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let opts = GlobalOpts {
        out_dir: cli.out,
        seed: cli.seed,
    };
    let result = match &cli.command {
        Command::GenPrior { config } => commands::cmd_gen_prior(config, &opts),
        Command::EstimateMi { config } => commands::cmd_estimate_mi(config, &opts),
        Command::Cotrain { config } => commands::cmd_cotrain(config, &opts),
        Command::Mechanism { config } => commands::cmd_mechanism(config, &opts),
        Command::VerifyPrior { config } => commands::cmd_verify_prior(config, &opts),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
