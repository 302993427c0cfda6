//! Line-oriented event trace: `time node kind detail`.
//!
//! Besides one record per processed event, the engine emits accounting
//! records (`data_send`, `unit_send`, `deliver`, `forward`, `drop`,
//! `ctrl_tx`) from which every metric can be recomputed.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};

use thiserror::Error;

use crate::graph::NodeId;
use crate::metrics::MetricsReport;
use crate::routing::DropReason;
use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub time: SimTime,
    pub node: Option<NodeId>,
    pub kind: &'static str,
    pub detail: String,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node {
            Some(n) => write!(f, "{} {} {}", self.time, n, self.kind)?,
            None => write!(f, "{} - {}", self.time, self.kind)?,
        }
        if !self.detail.is_empty() {
            write!(f, " {}", self.detail)?;
        }
        Ok(())
    }
}

pub fn write_trace<W: Write>(records: &[TraceRecord], mut out: W) -> io::Result<()> {
    for r in records {
        writeln!(out, "{r}")?;
    }
    Ok(())
}

pub fn render_trace(records: &[TraceRecord]) -> String {
    let mut buf = Vec::new();
    write_trace(records, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("trace is ASCII")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("trace line {line}: {message}")]
pub struct TraceParseError {
    pub line: usize,
    pub message: String,
}

fn field<'a>(detail: &'a str, key: &str) -> Option<&'a str> {
    detail
        .split_whitespace()
        .find_map(|kv| kv.strip_prefix(key).and_then(|rest| rest.strip_prefix('=')))
}

/// Rebuilds the metric counters from rendered trace text.
pub fn report_from_trace(text: &str) -> Result<MetricsReport, TraceParseError> {
    let mut report = MetricsReport::default();
    let mut forwarded: BTreeMap<NodeId, u64> = BTreeMap::new();
    let mut node_count: Option<u32> = None;
    for (idx, line) in text.lines().enumerate() {
        let err = |message: String| TraceParseError {
            line: idx + 1,
            message,
        };
        let mut parts = line.splitn(4, ' ');
        let (_time, node, kind) = match (parts.next(), parts.next(), parts.next()) {
            (Some(t), Some(n), Some(k)) => (t, n, k),
            _ => return Err(err(format!("malformed record `{line}`"))),
        };
        let detail = parts.next().unwrap_or("");
        let node_id = || -> Result<NodeId, TraceParseError> {
            node.parse::<u32>()
                .map(NodeId)
                .map_err(|_| err(format!("bad node `{node}`")))
        };
        match kind {
            "data_send" => report.data_sent += 1,
            "unit_send" => report.units_sent += 1,
            "unit_deliver" => report.units_delivered += 1,
            "deliver" => {
                report.data_delivered += 1;
                let ns: u64 = field(detail, "delay_ns")
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| err("deliver without delay_ns".into()))?;
                report.per_packet_delay.push(SimTime(ns));
            }
            "forward" => *forwarded.entry(node_id()?).or_default() += 1,
            "ctrl_tx" => report.control_transmissions += 1,
            "drop" => {
                let reason = field(detail, "reason")
                    .and_then(DropReason::parse)
                    .ok_or_else(|| err(format!("bad drop record `{line}`")))?;
                report.record_drop(reason);
            }
            "sim_end" => {
                node_count = field(detail, "nodes").and_then(|v| v.parse().ok());
            }
            _ => {}
        }
    }
    let nodes = node_count.ok_or(TraceParseError {
        line: 0,
        message: "trace has no sim_end record".into(),
    })?;
    report.per_node_forwarded = (0..nodes)
        .map(|i| (NodeId(i), forwarded.get(&NodeId(i)).copied().unwrap_or(0)))
        .collect();
    Ok(report)
}
