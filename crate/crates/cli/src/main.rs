//! `beamlab` command-line driver.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use beamlab::experiment::{catalog_json, list_catalog, run, ExperimentConfig, RunOptions};
use clap::{Parser, Subcommand};

/// Exit status when an experiment runs but misses a declared threshold.
const THRESHOLD_FAILED: u8 = 1;
/// Exit status for invalid configs and runtime errors.
const RUN_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "beamlab", about = "Gaussian beam quasimode experiments", disable_version_flag = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Directory for the CSV and JSON reports.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Extend the h-grid with the config's deep values.
        #[arg(long)]
        deep: bool,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print the manifold and experiment catalogs.
    List {
        #[arg(long)]
        json: bool,
    },
    /// Print the version.
    Version,
}

fn run_command(config: PathBuf, out: PathBuf, deep: bool, threads: Option<usize>) -> anyhow::Result<bool> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    let cfg = ExperimentConfig::load(&config)?;
    let report = run(&cfg, &RunOptions { out_dir: Some(out), deep })?;
    println!("{}", report.summary_line());
    for t in &report.thresholds {
        let bound = match (t.min, t.max) {
            (Some(a), Some(b)) => format!("in [{a:e}, {b:e}]"),
            (Some(a), None) => format!(">= {a:e}"),
            (None, Some(b)) => format!("<= {b:e}"),
            (None, None) => String::new(),
        };
        let value = t.value.map_or("missing".to_string(), |v| format!("{v:e}"));
        println!("  {} {} = {value} {bound}", if t.passed { "ok  " } else { "FAIL" }, t.metric);
    }
    if let (Some(c), Some(j)) = (&report.csv_path, &report.json_path) {
        println!("  wrote {} and {}", c.display(), j.display());
    }
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, deep, threads } => match run_command(config, out, deep, threads) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(THRESHOLD_FAILED),
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(RUN_ERROR)
            }
        },
        Command::List { json } => {
            if json {
                println!("{}", serde_json::to_string_pretty(&catalog_json()).expect("catalog serializes"));
            } else {
                print!("{}", list_catalog());
            }
            ExitCode::SUCCESS
        }
        Command::Version => {
            println!("beamlab {}", env!("CARGO_PKG_VERSION"));
            ExitCode::SUCCESS
        }
    }
}
