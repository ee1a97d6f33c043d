use std::process::ExitCode;

use clap::Parser;
use gllab_cli::{run, Cli, SEED_ENV};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let env_seed = std::env::var(SEED_ENV).ok();
    match run(&cli, env_seed.as_deref()) {
        Ok(report) => {
            println!("{}", report.manifest_path.display());
            match report.censored_only {
                Some(msg) => {
                    eprintln!("gllab: censored results only: {msg}");
                    ExitCode::from(4)
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("gllab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
