//! `cylab`: command-line driver for the cylinder Landau laboratory.

// `!(a > b)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "cylab",
    version,
    about = "Landau levels on a flux-threaded cylinder: eigenstates, transport loops and geometric phases"
)]
struct Cli {
    /// JSON run configuration; built-in defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads; all cores when absent.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long)]
    print_defaults: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate Landau eigenstates with their Hamiltonian residuals.
    Eigen,
    /// Run the configured loop and extract the geometric phase.
    Run,
    /// Repeat the loop over a grid of threading fluxes.
    Sweep,
    /// Repeat the loop over a ladder of durations.
    AdiabaticStudy,
    /// Check numerical invariants; exits nonzero if any fails.
    Verify,
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::defaults(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn execute(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("building the thread pool")?;
    }
    let config = resolve(&cli)?;
    if cli.print_defaults {
        println!("{}", serde_json::to_string_pretty(&config)?);
        return Ok(true);
    }
    let Some(command) = cli.command else {
        anyhow::bail!("no subcommand given; see --help");
    };
    std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    match command {
        Command::Eigen => commands::eigen(&config, &cli.out)?,
        Command::Run => commands::run(&config, &cli.out)?,
        Command::Sweep => commands::sweep(&config, &cli.out)?,
        Command::AdiabaticStudy => commands::adiabatic(&config, &cli.out)?,
        Command::Verify => return commands::verify(&config, &cli.out),
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
