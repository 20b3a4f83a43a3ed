//! Experiment runner behind the `svcrb` binary. Every subcommand reads one
//! JSON config, writes versioned artifacts into an output directory and
//! leaves a `resolved_config.json` next to them.

pub mod artifact;
pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::ExperimentConfig;
pub use error::{CliError, ErrorKind};

/// Environment variable that overrides the output directory.
pub const OUT_ENV: &str = "SVCRB_OUT";

#[derive(Debug, Parser)]
#[command(name = "svcrb", version, about = "Scalable video scheduling over Markov channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Replaces the config's seed list with this single seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Solve the restless-bandit relaxation.
    SolveRb,
    /// Solve the joint quality-and-scheduling program.
    SolveMusmdp,
    /// Rank states from a saved relaxation solution.
    Rank,
    /// Run the slot simulator over all seeds.
    Simulate,
    /// Solve the relaxation over a range of subchannel counts.
    Sweep,
    /// Critical load, playback rates and heatmaps from saved artifacts.
    Analyze,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SolveRb => "solve-rb",
            Command::SolveMusmdp => "solve-musmdp",
            Command::Rank => "rank",
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::Analyze => "analyze",
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::new(ErrorKind::Usage, "--config <path> is required"))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::new(ErrorKind::Usage, "--threads must be at least 1"));
        }
        // fails only if a pool already exists, in which case we keep it
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let env = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
    let out = commands::resolve_out_dir(cli.out.as_deref(), env, &cfg);
    cfg.out_dir = Some(out.clone());
    std::fs::create_dir_all(&out).map_err(|e| CliError::io(e, &out))?;
    commands::write_resolved(&cfg, &out)?;
    match cli.command {
        Command::SolveRb => commands::solve_rb_cmd(&cfg, &out).map(drop),
        Command::SolveMusmdp => commands::solve_musmdp_cmd(&cfg, &out).map(drop),
        Command::Rank => commands::rank_cmd(&cfg, &out).map(drop),
        Command::Simulate => commands::simulate_cmd(&cfg, &out).map(drop),
        Command::Sweep => commands::sweep_cmd(&cfg, &out).map(drop),
        Command::Analyze => commands::analyze_cmd(&cfg, &out).map(drop),
    }
}
