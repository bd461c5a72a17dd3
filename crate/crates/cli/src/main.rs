//! `cogit-harness`: seeded, reproducible command-line harness over the
//! `cogit-core` library. Every subcommand writes a structured JSON record,
//! a plot-ready metrics CSV, and the resolved config next to each other in
//! the output directory.

mod config;
mod output;
mod runs;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::HarnessConfig;
use output::{emit_ledger, ResultRecord};

#[derive(Parser, Debug)]
#[command(
    name = "cogit-harness",
    about = "Reproducible verification and optimization harness",
    version
)]
struct Cli {
    /// Path to a TOML config file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config value).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for records, CSVs, and resolved configs.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker thread count (overrides the config value).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Monte Carlo sample override where a scenario takes one.
    #[arg(long, global = true)]
    samples: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Verify the Haar fidelity / Bures-distance statistics and adjudicate
    /// the printed CDF against Monte Carlo.
    StatsVerify,
    /// Exact binomial concentration intervals and tail probabilities.
    ConcentrationTable,
    /// Holographic algebra demonstration: bundling, binding, permutation,
    /// and measurement-based recovery rates.
    AlgebraDemo,
    /// Run the defender scenario (SMON vs SION subset separation).
    Defend,
    /// Run the attacker scenarios (SMOA and/or DMOA demos).
    Attack,
    /// Collect the full discrepancy ledger into one record and print it.
    Ledger,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(HarnessError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(HarnessError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

enum HarnessError {
    /// Bad config or arguments: exit code 2.
    Validation(String),
    /// IO or computation failure: exit code 1.
    Runtime(String),
}

fn run(cli: &Cli) -> Result<(), HarnessError> {
    let mut cfg = load_config(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = cli.threads {
        cfg.threads = threads;
    }
    if let Some(samples) = cli.samples {
        cfg.stats_verify.samples = samples;
        cfg.algebra_demo.trials = samples;
    }
    cfg.validate().map_err(HarnessError::Validation)?;

    probe_out_dir(&cli.out)?;

    let record = dispatch(&cli.command, &cfg)
        .map_err(|e| HarnessError::Runtime(e.to_string()))?;
    let paths = record
        .persist(&cli.out)
        .map_err(|e| HarnessError::Runtime(format!("writing outputs: {e}")))?;

    print_summary(&record);
    if matches!(cli.command, Command::Ledger) {
        let report = emit_ledger(std::slice::from_ref(&record));
        let rendered = report.render();
        println!("{rendered}");
        let ledger_path = cli.out.join("ledger-report.txt");
        std::fs::write(&ledger_path, rendered)
            .map_err(|e| HarnessError::Runtime(format!("writing ledger report: {e}")))?;
        println!("ledger report: {}", ledger_path.display());
    }
    for p in paths {
        println!("wrote: {}", p.display());
    }
    Ok(())
}

fn dispatch(command: &Command, cfg: &HarnessConfig) -> Result<ResultRecord, cogit_core::CoreError> {
    match command {
        Command::StatsVerify => runs::run_stats_verify(cfg),
        Command::ConcentrationTable => runs::run_concentration_table(cfg),
        Command::AlgebraDemo => runs::run_algebra_demo(cfg),
        Command::Defend => runs::run_defend(cfg),
        Command::Attack => runs::run_attack(cfg),
        Command::Ledger => runs::run_ledger(cfg),
    }
}

fn load_config(path: Option<&Path>) -> Result<HarnessConfig, HarnessError> {
    match path {
        None => Ok(HarnessConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| {
                HarnessError::Runtime(format!("reading config {}: {e}", p.display()))
            })?;
            HarnessConfig::from_toml(&text).map_err(HarnessError::Validation)
        }
    }
}

/// Create the output directory and verify it is writable before spending
/// any compute, so a bad `--out` fails fast.
fn probe_out_dir(out: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(out)
        .map_err(|e| HarnessError::Runtime(format!("creating {}: {e}", out.display())))?;
    let probe = out.join(".write-probe");
    std::fs::write(&probe, b"ok")
        .map_err(|e| HarnessError::Runtime(format!("output dir not writable: {e}")))?;
    let _ = std::fs::remove_file(&probe);
    Ok(())
}

fn print_summary(record: &ResultRecord) {
    println!(
        "scenario: {}  seed: {}  duration: {:.2}s",
        record.scenario, record.seed, record.duration_seconds
    );
    for m in &record.metrics {
        match m.std_error {
            Some(se) if se > 0.0 => {
                println!("  {} = {:.6} ± {:.1e} [{}]", m.name, m.value, se, m.provenance.as_str())
            }
            _ => println!("  {} = {:.6} [{}]", m.name, m.value, m.provenance.as_str()),
        }
    }
}
