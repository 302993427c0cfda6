//! The four evaluation metrics: delivery ratio, routing load, average
//! end-to-end delay, and the coefficient of variation of per-node
//! forwarding load.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::graph::NodeId;
use crate::routing::DropReason;
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("no data packets were sent")]
    NoTraffic,
    #[error("no data packets were delivered")]
    NothingDelivered,
    #[error("no node forwarded any data packet")]
    ZeroMean,
}

/// Raw counters of one run.
///
/// `data_*` count original application packets. `units_*` count what
/// actually crossed the network: the packets themselves, or MDC
/// descriptions when coding is on. Drops are counted per unit.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsReport {
    pub data_sent: u64,
    pub data_delivered: u64,
    pub units_sent: u64,
    pub units_delivered: u64,
    /// Every transmission of a HELLO or TC, originated or relayed.
    pub control_transmissions: u64,
    pub per_packet_delay: Vec<SimTime>,
    /// Data units relayed by each node, zero entries included.
    pub per_node_forwarded: BTreeMap<NodeId, u64>,
    pub drop_reasons: BTreeMap<DropReason, u64>,
}

impl MetricsReport {
    pub fn drops(&self, reason: DropReason) -> u64 {
        self.drop_reasons.get(&reason).copied().unwrap_or(0)
    }

    pub fn total_drops(&self) -> u64 {
        self.drop_reasons.values().sum()
    }

    pub fn record_drop(&mut self, reason: DropReason) {
        *self.drop_reasons.entry(reason).or_default() += 1;
    }
}

pub fn delivery_ratio(report: &MetricsReport) -> Result<f64, MetricsError> {
    if report.data_sent == 0 {
        return Err(MetricsError::NoTraffic);
    }
    Ok(report.data_delivered as f64 / report.data_sent as f64)
}

pub fn routing_load(report: &MetricsReport) -> Result<f64, MetricsError> {
    if report.data_delivered == 0 {
        return Err(MetricsError::NothingDelivered);
    }
    Ok(report.control_transmissions as f64 / report.data_delivered as f64)
}

/// Mean delay over delivered packets, in seconds.
pub fn average_delay(report: &MetricsReport) -> Result<f64, MetricsError> {
    if report.per_packet_delay.is_empty() {
        return Err(MetricsError::NothingDelivered);
    }
    let total: u128 = report.per_packet_delay.iter().map(|d| d.as_nanos() as u128).sum();
    Ok(total as f64 / report.per_packet_delay.len() as f64 / 1e9)
}

/// Population standard deviation over mean of the forwarding counts.
pub fn cov_load(report: &MetricsReport) -> Result<f64, MetricsError> {
    coefficient_of_variation(report.per_node_forwarded.values().map(|&c| c as f64))
}

pub fn coefficient_of_variation<I>(values: I) -> Result<f64, MetricsError>
where
    I: IntoIterator<Item = f64>,
{
    let values: Vec<f64> = values.into_iter().collect();
    if values.is_empty() {
        return Err(MetricsError::ZeroMean);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if mean <= 0.0 {
        return Err(MetricsError::ZeroMean);
    }
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok(variance.sqrt() / mean)
}
