use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use beamtrack::harness::{run_to_dir, ExperimentConfig, Mode};
use clap::{Args, Parser, Subcommand};

/// Monte Carlo experiments for recursive beam and channel tracking.
#[derive(Parser)]
#[command(name = "beamtrack", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Direction MSE vs. slot in the static scenario.
    StaticMse(RunArgs),
    /// Steady-state MSE and rate vs. angular velocity.
    Dynamic(RunArgs),
    /// Inverse CRLB over the training-offset grid.
    CrlbSurface(RunArgs),
    /// Stable-point check of one estimate.
    Analysis(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::StaticMse(a) => (Mode::StaticMse, a),
        Command::Dynamic(a) => (Mode::Dynamic, a),
        Command::CrlbSurface(a) => (Mode::CrlbSurface, a),
        Command::Analysis(a) => (Mode::Analysis, a),
    };
    let text = fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let mut cfg =
        ExperimentConfig::parse(&text, Some(mode)).with_context(|| format!("in {}", args.config.display()))?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = args.out {
        cfg.out_dir = out;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if let Some(threads) = args.threads {
        cfg.threads = threads;
    }
    cfg.validate()?;

    let out = run_to_dir(&cfg, &cfg.out_dir)?;
    if !out.summary.is_empty() {
        print!("{}", out.summary);
    }
    for f in &out.files {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}
