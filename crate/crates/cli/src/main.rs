use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, ValueEnum};
use liqcomm::pipeline::{self, Command, RunConfig};

#[derive(Parser)]
#[command(name = "liqcomm", version, about = "Liquidity commonality estimation pipeline")]
struct Cli {
    /// Stage to run; later stages recompute earlier ones
    command: Cmd,
    /// TOML run configuration
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory, overriding `out_dir`
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for parallel stages
    #[arg(long, value_name = "N")]
    max_workers: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Cmd {
    /// Load and filter the daily and ownership panels
    Ingest,
    /// Ingest, then estimate market and high-ownership liquidity betas
    Estimate,
    /// Ingest, estimate and write the selected tables and figures
    Report,
    /// Write a synthetic panel with its ground truth
    Simulate,
    /// Simulate (when configured), then ingest, estimate and report
    All,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Ingest => Command::Ingest,
            Cmd::Estimate => Command::Estimate,
            Cmd::Report => Command::Report,
            Cmd::Simulate => Command::Simulate,
            Cmd::All => Command::All,
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = RunConfig::load(&cli.config).with_context(|| format!("reading {}", cli.config.display()))?;
    if let Some(out) = cli.out {
        cfg.out_dir = out;
    }
    if cli.max_workers.is_some() {
        cfg.max_workers = cli.max_workers;
    }
    let command = Command::from(cli.command);
    let manifest = pipeline::run(command, &cfg).with_context(|| format!("`{}` failed", command.as_str()))?;
    log::info!(
        "{} finished: {} outputs in {}",
        command.as_str(),
        manifest.outputs.len(),
        cfg.out_dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
