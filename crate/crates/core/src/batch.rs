//! Parameter sweeps over variants, speeds and seeds, written as CSV.

use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

use crate::metrics::{self, MetricsReport};
use crate::routing::DropReason;
use crate::sim::{self, Scenario, ScenarioError, Variant};

pub const CSV_HEADER: [&str; 12] = [
    "variant",
    "max_speed_mps",
    "seed",
    "data_sent",
    "data_delivered",
    "delivery_ratio",
    "routing_load",
    "avg_delay_ms",
    "cov_load",
    "drops_no_route",
    "drops_link",
    "drops_recovery_limit",
];

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("sweep axis `{0}` is empty")]
    EmptyAxis(&'static str),
    #[error("max speed {0} is not a finite non-negative number")]
    BadSpeed(f64),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("csv output: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchRow {
    pub variant: Variant,
    pub max_speed_mps: f64,
    pub seed: u64,
    pub report: MetricsReport,
}

impl BatchRow {
    pub fn record(&self) -> Vec<String> {
        let opt = |v: Result<f64, metrics::MetricsError>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        let r = &self.report;
        vec![
            self.variant.to_string(),
            format!("{}", self.max_speed_mps),
            self.seed.to_string(),
            r.data_sent.to_string(),
            r.data_delivered.to_string(),
            opt(metrics::delivery_ratio(r)),
            opt(metrics::routing_load(r)),
            opt(metrics::average_delay(r).map(|s| s * 1e3)),
            opt(metrics::cov_load(r)),
            r.drops(DropReason::NoRoute).to_string(),
            r.drops(DropReason::LinkFailure).to_string(),
            r.drops(DropReason::RecoveryLimit).to_string(),
        ]
    }
}

/// Runs every (variant, speed, seed) combination of `base`, in parallel.
/// Rows come back sorted by variant, then speed, then seed.
pub fn run_batch(
    base: &Scenario,
    variants: &[Variant],
    speeds: &[f64],
    seeds: &[u64],
) -> Result<Vec<BatchRow>, BatchError> {
    if variants.is_empty() {
        return Err(BatchError::EmptyAxis("variants"));
    }
    if speeds.is_empty() {
        return Err(BatchError::EmptyAxis("speeds"));
    }
    if seeds.is_empty() {
        return Err(BatchError::EmptyAxis("seeds"));
    }
    if let Some(&bad) = speeds.iter().find(|s| !s.is_finite() || **s < 0.0) {
        return Err(BatchError::BadSpeed(bad));
    }
    let mut jobs: Vec<(Variant, f64, u64)> = Vec::new();
    for &v in variants {
        for &s in speeds {
            for &seed in seeds {
                jobs.push((v, s, seed));
            }
        }
    }
    jobs.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));

    jobs.into_par_iter()
        .map(|(variant, speed, seed)| {
            let mut scenario = base.clone().with_max_speed(speed);
            scenario.variant = variant;
            scenario.seed = seed;
            let report = sim::run(&scenario)?;
            Ok(BatchRow {
                variant,
                max_speed_mps: speed,
                seed,
                report,
            })
        })
        .collect()
}

pub fn write_csv<W: Write>(rows: &[BatchRow], out: W) -> Result<(), BatchError> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CSV_HEADER)?;
    for row in rows {
        writer.write_record(row.record())?;
    }
    writer.flush()?;
    Ok(())
}

pub fn render_csv(rows: &[BatchRow]) -> Result<String, BatchError> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}
