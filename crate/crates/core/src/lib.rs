//! Multipath OLSR: link-state routing with penalized multipath Dijkstra,
//! source routing with hop-by-hop recovery, Mojette multiple description
//! coding and a packet-level simulator to compare them.

pub mod batch;
pub mod graph;
pub mod mdc;
pub mod metrics;
pub mod olsr;
pub mod routing;
pub mod sim;
pub mod time;

pub use batch::{run_batch, BatchError, CSV_HEADER};
pub use graph::{
    dijkstra, get_path, multipath_dijkstra, Cost, CostPolicy, GraphError, NodeId, Path, SourceTree,
    TopologyGraph,
};
pub use mdc::{CodecConfig, Description, MdcError};
pub use metrics::{MetricsError, MetricsReport};
pub use olsr::{OlsrError, OlsrTimers, ProtocolState};
pub use routing::{DataPacket, DropReason, ForwardDecision, RoutingError, SourceRouteHeader};
pub use sim::{run, run_with_trace, Scenario, ScenarioError, TraceRecord, Variant};
pub use time::SimTime;
