//! Command-line front end: single runs and parameter sweeps.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use mpolsr::batch::{self, BatchRow};
use mpolsr::sim::{self, Scenario, Variant};

#[derive(Debug, Parser)]
#[command(name = "mpolsr", version, about = "Multipath OLSR simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario and print its metrics row as CSV.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        variant: Variant,
        #[arg(long)]
        seed: u64,
        /// Write the event trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run the cross product of variants, speeds and seeds.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        /// Comma-separated, e.g. `olsr,re-mpolsr`.
        #[arg(long, value_delimiter = ',', required = true)]
        variants: Vec<Variant>,
        #[arg(long, value_delimiter = ',', required = true)]
        speeds: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(path: &PathBuf) -> Result<Scenario> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Scenario::parse(&text).with_context(|| format!("scenario {}", path.display()))
}

fn simulate(path: &PathBuf, variant: Variant, seed: u64, trace: Option<&PathBuf>) -> Result<()> {
    let mut scenario = load(path)?;
    scenario.variant = variant;
    scenario.seed = seed;
    let report = match trace {
        Some(trace_path) => {
            let (report, records) = sim::run_with_trace(&scenario)?;
            let file = File::create(trace_path)
                .with_context(|| format!("creating {}", trace_path.display()))?;
            let mut out = BufWriter::new(file);
            sim::write_trace(&records, &mut out)?;
            out.flush()?;
            report
        }
        None => sim::run(&scenario)?,
    };
    let row = BatchRow {
        variant,
        max_speed_mps: scenario.v_max_mps,
        seed,
        report,
    };
    batch::write_csv(&[row], io::stdout().lock())?;
    Ok(())
}

fn sweep(path: &PathBuf, variants: &[Variant], speeds: &[f64], seeds: &[u64], out: &PathBuf) -> Result<()> {
    let base = load(path)?;
    if variants.is_empty() || speeds.is_empty() || seeds.is_empty() {
        bail!("variants, speeds and seeds must each list at least one value");
    }
    let rows = batch::run_batch(&base, variants, speeds, seeds)?;
    let file = File::create(out).with_context(|| format!("creating {}", out.display()))?;
    batch::write_csv(&rows, BufWriter::new(file))?;
    eprintln!("wrote {} rows to {}", rows.len(), out.display());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate {
            scenario,
            variant,
            seed,
            trace,
        } => simulate(&scenario, variant, seed, trace.as_ref()),
        Command::Sweep {
            scenario,
            variants,
            speeds,
            seeds,
            out,
        } => sweep(&scenario, &variants, &speeds, &seeds, &out),
    }
}
