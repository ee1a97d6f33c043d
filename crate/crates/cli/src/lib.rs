//! Batch driver for the `gllab` binary: TOML config in, CSV and JSON out.
//!
//! Every run writes its tables, JSON summaries and a `manifest.json` into one
//! directory. Each CSV starts with `# manifest <hash>`, where the hash covers the
//! command, the config bytes, the effective seed and the tool version but not
//! the thread count, so reruns on any pool size are byte-identical.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};

pub use config::ExperimentConfig;
pub use error::CliError;
pub use output::{Outputs, RunManifest, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Lyapunov,
    Tails,
    Bounds,
    Mdp,
    Decompose,
    CheckMeasure,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Lyapunov => "lyapunov",
            Command::Tails => "tails",
            Command::Bounds => "bounds",
            Command::Mdp => "mdp",
            Command::Decompose => "decompose",
            Command::CheckMeasure => "check-measure",
        }
    }
}

#[derive(Debug, Clone, Parser)]
#[command(name = "gllab", version, about = "Deviation experiments for products of random matrices")]
pub struct Cli {
    pub command: Command,
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides both the config seed and GLLAB_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub const DEFAULT_OUT: &str = "gllab-out";
pub const SEED_ENV: &str = "GLLAB_SEED";

/// Precedence: `--seed`, then `GLLAB_SEED`, then the config.
pub fn effective_seed(flag: Option<u64>, env: Option<&str>, config: u64) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match env {
        Some(v) => v.trim().parse().map_err(|_| CliError::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        None => Ok(config),
    }
}

#[derive(Debug)]
pub struct RunReport {
    pub manifest_path: PathBuf,
    pub manifest: RunManifest,
    /// Present when outputs were written but every estimate was censored.
    pub censored_only: Option<String>,
}

/// Parses, validates, computes in a dedicated pool and writes all outputs.
pub fn run(cli: &Cli, env_seed: Option<&str>) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", cli.config.display())))?;
    let cfg = ExperimentConfig::parse(&text)?;
    let threads = cli.threads.unwrap_or(cfg.threads);
    let seed = effective_seed(cli.seed, env_seed, cfg.seed)?;
    let command = cli.command.name();
    let mut checked = cfg.clone();
    checked.threads = threads;
    checked.validate_for(command)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {threads} worker threads: {e}")))?;
    let outputs = pool.install(|| dispatch(cli.command, &cfg, seed))?;

    let out_dir: PathBuf = cli.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| Path::new(DEFAULT_OUT).to_path_buf());
    let version = env!("CARGO_PKG_VERSION").to_string();
    let config_hash = output::sha256_hex(text.as_bytes());
    let manifest = RunManifest {
        command: command.into(),
        manifest_hash: output::manifest_hash(command, &config_hash, seed, &version),
        config_hash,
        seed,
        threads,
        version,
        wall_time_secs: started.elapsed().as_secs_f64(),
        files: Vec::new(),
    };
    let manifest_path = output::write_all(&out_dir, &outputs, manifest.clone())?;
    let manifest = RunManifest { files: written_files(&outputs), ..manifest };
    Ok(RunReport { manifest_path, manifest, censored_only: outputs.censored_only })
}

fn written_files(o: &Outputs) -> Vec<String> {
    o.tables.iter().map(|(n, _)| format!("{n}.csv")).chain(o.json.iter().map(|(n, _)| format!("{n}.json"))).collect()
}

pub fn dispatch(command: Command, cfg: &ExperimentConfig, seed: u64) -> Result<Outputs, CliError> {
    match command {
        Command::Lyapunov => commands::lyapunov(cfg, seed),
        Command::Tails => commands::tails(cfg, seed),
        Command::Bounds => commands::bounds(cfg, seed),
        Command::Mdp => commands::mdp(cfg, seed),
        Command::Decompose => commands::decompose(cfg, seed),
        Command::CheckMeasure => commands::check_measure(cfg, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_precedence() {
        assert_eq!(effective_seed(Some(1), Some("2"), 3).unwrap(), 1);
        assert_eq!(effective_seed(None, Some("2"), 3).unwrap(), 2);
        assert_eq!(effective_seed(None, None, 3).unwrap(), 3);
        assert_eq!(effective_seed(None, Some("x"), 3).unwrap_err().exit_code(), 2);
    }
}
