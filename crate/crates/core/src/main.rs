use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use phoenix_sim::experiment::{compare_files, run_experiment, ExperimentConfig};

#[derive(Parser)]
#[command(
    version,
    about = "Coordinated provisioning simulator for batch jobs and web services"
)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every point of an experiment config and write report.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Check node conservation after every event.
        #[arg(long)]
        assert_invariants: bool,
    },
    /// Compare report rows against a single-row baseline report.
    Compare {
        #[arg(long)]
        baseline: PathBuf,
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Run {
            config,
            out,
            assert_invariants,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let rows = run_experiment(&cfg, out.as_deref(), assert_invariants)
                .with_context(|| format!("running {}", config.display()))?;
            log::info!("wrote {} report rows", rows.len());
        }
        Command::Compare {
            baseline,
            reports,
            out,
        } => {
            let table = compare_files(&baseline, &reports, &out)?;
            log::info!("wrote {} comparison rows to {}", table.len(), out.display());
        }
    }
    Ok(())
}
