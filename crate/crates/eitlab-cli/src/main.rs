//! Batch front-end for the DtN laboratory: identity verification, Löwner
//! certification, tangential-cone scans, and Landweber experiments.
//!
//! Exit codes: 0 = all assertions passed, 1 = assertion failure,
//! 2 = configuration error.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::certify::Which;
use config::Overrides;
use report::OutputDir;

#[derive(Parser)]
#[command(
    name = "eitlab",
    about = "Certification laboratory for the EIT Dirichlet-to-Neumann map"
)]
struct Cli {
    /// Configuration file (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides config and EITLAB_OUT).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Base seed for scenario generation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker budget (overrides config and EITLAB_JOBS); 0 = all cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Relative certificate tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the operator identity suite (cross formula, resolvent, projector).
    VerifyIdentities,
    /// Certify the Löwner-order inequalities over the configured scenarios.
    Certify {
        #[arg(long, value_enum, default_value = "all")]
        which: Which,
    },
    /// Sweep tangential-cone scenarios and check every fired gate.
    TccScan,
    /// Run the monotone vs. oscillatory Landweber experiment.
    Landweber,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = Overrides {
        seed: cli.seed,
        tol: cli.tol,
        jobs: cli.jobs,
        out_dir: cli.out.clone(),
    };
    let loaded = match config::load(cli.config.as_deref(), &overrides) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("configuration error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let out = match OutputDir::create(&loaded.config.run.out_dir) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("configuration error: {e:#}");
            return ExitCode::from(2);
        }
    };

    let outcome = match cli.command {
        Command::VerifyIdentities => commands::verify::run(&loaded, &out),
        Command::Certify { which } => commands::certify::run(&loaded, &out, which),
        Command::TccScan => commands::tcc_scan::run(&loaded, &out),
        Command::Landweber => commands::landweber_cmd::run(&loaded, &out),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("run failed: {e:#}");
            ExitCode::from(1)
        }
    }
}
