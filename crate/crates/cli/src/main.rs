use clap::{Parser, Subcommand};
use cranloc::run::{self, CheckArgs, OptimizeArgs, SweepArgs};
use std::path::PathBuf;
use std::process::ExitCode;

/// Fronthaul quantization design and evaluation for cloud radio positioning.
#[derive(Parser)]
#[command(name = "cranloc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize per-unit quantization noise PSDs and write them as CSVs.
    Optimize {
        /// Scenario file (TOML).
        #[arg(long)]
        scenario: PathBuf,
        /// Replace every unit's fronthaul capacity, bits/s/Hz.
        #[arg(long)]
        capacity: Option<f64>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Outer iteration cap.
        #[arg(long, default_value_t = 100)]
        max_iters: usize,
        /// Outer stop threshold on the aggregate relative design change.
        #[arg(long, default_value_t = 1e-5)]
        delta_th: f64,
    },
    /// Optimize and Monte Carlo evaluate over a capacity grid.
    Sweep {
        /// Scenario file (TOML).
        #[arg(long)]
        scenario: PathBuf,
        /// Comma-separated capacities, bits/s/Hz.
        #[arg(long, value_delimiter = ',', required = true)]
        capacities: Vec<f64>,
        /// Seed for position and fading draws.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Number of target positions.
        #[arg(long, default_value_t = 400)]
        positions: usize,
        /// Fading draws per position.
        #[arg(long, default_value_t = 2000)]
        fading_draws: usize,
        /// Outer iteration cap.
        #[arg(long, default_value_t = 100)]
        max_iters: usize,
        /// Outer stop threshold on the aggregate relative design change.
        #[arg(long, default_value_t = 1e-5)]
        delta_th: f64,
    },
    /// Validate a scenario and its geometric preconditions.
    Check {
        /// Scenario file (TOML).
        #[arg(long)]
        scenario: PathBuf,
        /// Seed for the covering samples.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn is_not_found(err: &anyhow::Error) -> bool {
    err.chain().any(|c| {
        c.downcast_ref::<std::io::Error>()
            .is_some_and(|e| e.kind() == std::io::ErrorKind::NotFound)
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let outcome: anyhow::Result<bool> = match cli.command {
        Command::Optimize { scenario, capacity, out, max_iters, delta_th } => {
            run::cmd_optimize(&OptimizeArgs { scenario, capacity, out, max_iters, delta_th })
                .map(|()| true)
        }
        Command::Sweep {
            scenario,
            capacities,
            seed,
            out,
            positions,
            fading_draws,
            max_iters,
            delta_th,
        } => run::cmd_sweep(&SweepArgs {
            scenario,
            capacities,
            seed,
            out,
            positions,
            fading_draws,
            max_iters,
            delta_th,
        })
        .map(|()| true),
        Command::Check { scenario, seed } => run::cmd_check(&CheckArgs { scenario, seed }),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_not_found(&e) { 2 } else { 1 })
        }
    }
}
