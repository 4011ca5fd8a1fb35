//! `reactkit`: reaction-time measurement from event logs and pose streams.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::FileConfig;

#[derive(Debug, Parser)]
#[command(name = "reactkit", version, about = "Reaction-time measurement from event logs and pose streams")]
struct Cli {
    /// TOML config file; command-line flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every randomized step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Nominal pose frame rate.
    #[arg(long, global = true)]
    fps: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and validate pose files; write validation reports and velocity series.
    Ingest(commands::ingest::Args),
    /// Detect vision-based reaction times in pose streams.
    Detect(commands::detect::Args),
    /// Magnitude spectrum and wavelet transform of a velocity series.
    Spectral(commands::spectral::Args),
    /// Run warning scenarios and write event logs.
    Scenario(commands::scenario::Args),
    /// Extract reaction times and transport latency from event logs.
    Srt(commands::srt::Args),
    /// Summaries and t-tests over reaction-time records.
    Stats(commands::stats::Args),
    /// Generate synthetic pose streams and reaction-time records.
    Synth(commands::synth::Args),
}

/// Settings shared by every subcommand after merging flags and config file.
#[derive(Debug, Clone)]
pub struct Global {
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub fps: f64,
    pub file: FileConfig,
}

impl Global {
    pub fn require_seed(&self, what: &str) -> anyhow::Result<u64> {
        self.seed
            .ok_or_else(|| anyhow::anyhow!("{what} needs a seed: pass --seed or set `seed` in the config file"))
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let fps = cli.fps.or(file.fps).unwrap_or(reactkit_core::pose::DEFAULT_FPS);
    if !(fps.is_finite() && fps > 0.0) {
        anyhow::bail!("fps must be positive, got {fps}");
    }
    let global = Global {
        seed: cli.seed.or(file.seed),
        out: cli.out.or_else(|| file.out.clone()).unwrap_or_else(|| PathBuf::from("out")),
        fps,
        file,
    };
    match cli.command {
        Command::Ingest(args) => commands::ingest::run(&global, args),
        Command::Detect(args) => commands::detect::run(&global, args),
        Command::Spectral(args) => commands::spectral::run(&global, args),
        Command::Scenario(args) => commands::scenario::run(&global, args),
        Command::Srt(args) => commands::srt::run(&global, args),
        Command::Stats(args) => commands::stats::run(&global, args),
        Command::Synth(args) => commands::synth::run(&global, args),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
