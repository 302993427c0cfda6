//! Discrete-event simulation of a mobile ad hoc network.

mod engine;
pub mod mobility;
pub mod scenario;
pub mod trace;

pub use engine::{mac_service_time, Event, EventKind, Frame, MobileNode, Payload, Simulator};
pub use mobility::{in_range, MobilityParams, Position, Waypoint};
pub use scenario::{Placement, Scenario, ScenarioError, Variant};
pub use trace::{render_trace, report_from_trace, write_trace, TraceParseError, TraceRecord};

use crate::metrics::MetricsReport;

/// Runs `scenario` to completion.
pub fn run(scenario: &Scenario) -> Result<MetricsReport, ScenarioError> {
    Ok(Simulator::new(scenario, false)?.run().0)
}

/// Like [`run`], also returning the full event trace.
pub fn run_with_trace(scenario: &Scenario) -> Result<(MetricsReport, Vec<TraceRecord>), ScenarioError> {
    let (report, trace) = Simulator::new(scenario, true)?.run();
    Ok((report, trace.unwrap_or_default()))
}
