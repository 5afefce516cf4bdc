//! `adce`: command-line driver for the qutrit-cavity ADCE simulator.
//!
//! Exit codes: 0 success, 2 configuration error, 3 regime violation,
//! 4 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use adce::error::AdceError;
use adce::experiments::{resolve, run_scenario, ExperimentConfig, Scenario};

#[derive(Parser)]
#[command(name = "adce", version, about = "Nonstationary qutrit-cavity ADCE simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (JSON). Scenario defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV tables, metadata and plot scripts.
    #[arg(long, global = true, default_value = "results")]
    out: PathBuf,
    /// Worker threads for ensemble members and sweep points.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Assert that the run involves no randomness (always true; every output
    /// is a deterministic function of the configuration).
    #[arg(long, global = true)]
    seedless: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Dressed-state table (eigenvalues, corrections, vectors).
    Dressed,
    /// Transition-rate table for the candidate ADCE transitions.
    Rates,
    /// Exact time-domain simulation; requires an explicit configuration.
    Simulate,
    /// Preset scenario: fig1, fig2a, fig2b, fig3a, fig3b, fig3c or fig4.
    Figure { id: String },
    /// Parameter sweep over up to two axes; requires a configuration.
    Sweep,
}

fn exit_code(e: &AdceError) -> u8 {
    match e {
        AdceError::Config(_)
        | AdceError::Json(_)
        | AdceError::InvalidCutoff(_)
        | AdceError::MissingSubspace(_)
        | AdceError::BoundarySubspace { .. } => 2,
        AdceError::RegimeViolation { .. } | AdceError::AmbiguousTone { .. } => 3,
        AdceError::Integrator(_)
        | AdceError::CutoffLeakage { .. }
        | AdceError::NearDegeneracy(_)
        | AdceError::ToneClass { .. }
        | AdceError::NotBlockDiagonal(_) => 4,
        AdceError::Io(_) => 1,
    }
}

fn run(cli: &Cli) -> Result<(), AdceError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| AdceError::Config(format!("thread pool: {e}")))?;
    }
    let scenario = match &cli.command {
        Command::Dressed => Scenario::Dressed,
        Command::Rates => Scenario::Rates,
        Command::Simulate => Scenario::Simulate,
        Command::Figure { id } => id.parse()?,
        Command::Sweep => Scenario::Sweep,
    };
    if matches!(
        scenario,
        Scenario::Rates | Scenario::Dressed | Scenario::Simulate | Scenario::Sweep
    ) && matches!(cli.command, Command::Figure { .. })
    {
        return Err(AdceError::Config(format!(
            "{scenario} is a table subcommand, not a figure id"
        )));
    }
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            ExperimentConfig::from_json(&text)?
        }
        None => ExperimentConfig::bare(scenario),
    };
    // the subcommand decides what runs; the file provides the parameters
    config.scenario = scenario.to_string();
    let resolved = resolve(&config)?;
    if cli.seedless {
        eprintln!("seedless: no randomness is used anywhere; outputs depend only on the configuration");
    }
    let bundle = run_scenario(&resolved, &cli.out)?;
    for f in &bundle.files {
        println!("wrote {}", f.display());
    }
    if let Some(results) = bundle.metadata.get("results") {
        if let Some(c) = results.get("constraints") {
            let pass = c.get("pass").and_then(|v| v.as_bool()).unwrap_or(false);
            println!("constraints: {}", if pass { "pass" } else { "FAIL" });
        }
        if let Some(i) = results.get("integrator") {
            println!(
                "integrator: step {} (1/omega0), norm drift {}",
                i.get("step").unwrap_or(&serde_json::Value::Null),
                i.get("norm_err_max").unwrap_or(&serde_json::Value::Null)
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
