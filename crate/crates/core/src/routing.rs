//! On-demand multipath routes, semi-source-route forwarding with local
//! route recovery, and the hop-by-hop OLSR baseline.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::graph::{self, CostPolicy, GraphError, NodeId, Path};
use crate::mdc::TaggedDescription;
use crate::olsr::ProtocolState;
use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RoutingError {
    #[error("no route to {0}")]
    NoRoute(NodeId),
    #[error("packet at {at} but header cursor points at {expected}")]
    MisroutedPacket { at: NodeId, expected: NodeId },
    #[error("packet carries no source route")]
    MissingSourceRoute,
    #[error("destination equals the local node")]
    SelfDestination,
}

impl From<GraphError> for RoutingError {
    fn from(err: GraphError) -> Self {
        match err {
            GraphError::NoRoute(n) | GraphError::UnknownSource(n) => RoutingError::NoRoute(n),
            other => unreachable!("topology graphs are built valid: {other}"),
        }
    }
}

/// Why a data unit never reached its destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DropReason {
    NoRoute,
    TtlExceeded,
    RecoveryLimit,
    /// MAC retry timeout toward a neighbor that is out of range.
    LinkFailure,
    /// MAC interface queue full.
    QueueOverflow,
    /// Still queued or in the air when the run ended.
    InFlight,
}

impl DropReason {
    pub const ALL: [DropReason; 6] = [
        DropReason::NoRoute,
        DropReason::TtlExceeded,
        DropReason::RecoveryLimit,
        DropReason::LinkFailure,
        DropReason::QueueOverflow,
        DropReason::InFlight,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::NoRoute => "no_route",
            DropReason::TtlExceeded => "ttl_exceeded",
            DropReason::RecoveryLimit => "recovery_limit",
            DropReason::LinkFailure => "link",
            DropReason::QueueOverflow => "queue_overflow",
            DropReason::InFlight => "in_flight",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.as_str() == s)
    }
}

/// Hop list carried by a data packet plus the index of the current holder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceRouteHeader {
    pub route: Vec<NodeId>,
    pub cursor: usize,
    pub recovery_count: u32,
}

impl SourceRouteHeader {
    pub fn new(path: &Path) -> Self {
        Self {
            route: path.hops.clone(),
            cursor: 0,
            recovery_count: 0,
        }
    }

    pub fn current(&self) -> NodeId {
        self.route[self.cursor]
    }

    pub fn destination(&self) -> NodeId {
        *self.route.last().expect("route is never empty")
    }

    pub fn next_hop(&self) -> Option<NodeId> {
        self.route.get(self.cursor + 1).copied()
    }

    pub fn advance(&mut self) {
        debug_assert!(self.cursor + 1 < self.route.len());
        self.cursor += 1;
    }

    /// Replaces the route from the cursor onward with `suffix`, which must
    /// start at the current node.
    ///
    /// The traversed prefix is kept when the result stays node-simple.
    /// Otherwise the route restarts at the current node.
    pub fn splice(&mut self, suffix: &[NodeId]) {
        debug_assert_eq!(suffix.first(), Some(&self.current()));
        let prefix = &self.route[..self.cursor];
        if prefix.iter().any(|n| suffix.contains(n)) {
            self.route = suffix.to_vec();
            self.cursor = 0;
        } else {
            self.route.truncate(self.cursor);
            self.route.extend_from_slice(suffix);
        }
        self.recovery_count += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MdcTag {
    pub group_id: u64,
    pub description_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataPacket {
    pub flow_id: u32,
    pub sequence: u64,
    pub source: NodeId,
    pub destination: NodeId,
    pub payload_size: usize,
    /// Absent for the hop-by-hop baseline.
    pub header: Option<SourceRouteHeader>,
    pub mdc: Option<Box<TaggedDescription>>,
    pub created_at: SimTime,
    pub hop_count: u32,
}

impl DataPacket {
    pub fn mdc_tag(&self) -> Option<MdcTag> {
        self.mdc.as_ref().map(|t| MdcTag {
            group_id: t.group_id,
            description_index: t.description_index,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ForwardDecision {
    Deliver,
    ForwardTo(NodeId),
    Recovered { new_route: Vec<NodeId>, next_hop: NodeId },
    Drop(DropReason),
}

/// Forwarding knobs shared by the source-routed variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForwardingConfig {
    pub recovery_enabled: bool,
    pub recovery_cap: u32,
    pub ttl: u32,
}

impl Default for ForwardingConfig {
    fn default() -> Self {
        Self {
            recovery_enabled: true,
            recovery_cap: 3,
            ttl: 32,
        }
    }
}

/// Multipath routes from the local node to `dest` over its current
/// topology knowledge.
pub fn compute_routes(
    state: &ProtocolState,
    dest: NodeId,
    n_routes: usize,
    policy: &CostPolicy,
    now: SimTime,
) -> Result<Vec<Path>, RoutingError> {
    if dest == state.self_id {
        return Err(RoutingError::SelfDestination);
    }
    let graph = state.build_topology_graph(now);
    if !graph.contains_node(dest) {
        return Err(RoutingError::NoRoute(dest));
    }
    Ok(graph::multipath_dijkstra(
        state.self_id,
        dest,
        &graph,
        n_routes,
        policy,
    )?)
}

/// Round-robin: packet `sequence` takes `routes[sequence mod len]`.
pub fn allocate_route(sequence: u64, routes: &[Path]) -> &Path {
    assert!(!routes.is_empty(), "allocate_route needs at least one route");
    &routes[(sequence % routes.len() as u64) as usize]
}

/// Multipath routes cached per destination until the topology changes.
#[derive(Debug, Clone, Default)]
pub struct RouteCache {
    entries: BTreeMap<NodeId, (u64, Vec<Path>)>,
    pub computations: u64,
}

impl RouteCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn routes(
        &mut self,
        state: &ProtocolState,
        dest: NodeId,
        n_routes: usize,
        policy: &CostPolicy,
        now: SimTime,
    ) -> Result<&[Path], RoutingError> {
        let generation = state.generation();
        let fresh = self
            .entries
            .get(&dest)
            .is_some_and(|(g, _)| *g == generation);
        if !fresh {
            self.entries.retain(|_, (g, _)| *g == generation);
            self.computations += 1;
            let routes = compute_routes(state, dest, n_routes, policy, now)?;
            self.entries.insert(dest, (generation, routes));
        }
        Ok(&self.entries[&dest].1)
    }

    pub fn invalidate(&mut self) {
        self.entries.clear();
    }
}

/// Decides what the current holder does with a source-routed packet.
///
/// The next hop is checked against the local symmetric neighbor set; on a
/// miss the node recomputes a route from its own topology knowledge.
pub fn forward(
    state: &ProtocolState,
    packet: &DataPacket,
    config: &ForwardingConfig,
    now: SimTime,
) -> Result<ForwardDecision, RoutingError> {
    let header = packet
        .header
        .as_ref()
        .ok_or(RoutingError::MissingSourceRoute)?;
    if header.current() != state.self_id {
        return Err(RoutingError::MisroutedPacket {
            at: state.self_id,
            expected: header.current(),
        });
    }
    let Some(next_hop) = header.next_hop() else {
        return Ok(ForwardDecision::Deliver);
    };
    if packet.hop_count >= config.ttl {
        return Ok(ForwardDecision::Drop(DropReason::TtlExceeded));
    }
    if state.is_symmetric_neighbor(next_hop, now) {
        return Ok(ForwardDecision::ForwardTo(next_hop));
    }
    if !config.recovery_enabled {
        return Ok(ForwardDecision::Drop(DropReason::NoRoute));
    }
    if header.recovery_count >= config.recovery_cap {
        return Ok(ForwardDecision::Drop(DropReason::RecoveryLimit));
    }
    match route_recovery(state, next_hop, header.destination(), now) {
        Ok(path) => Ok(ForwardDecision::Recovered {
            next_hop: path.hops[1],
            new_route: path.hops,
        }),
        Err(RoutingError::NoRoute(_)) => Ok(ForwardDecision::Drop(DropReason::NoRoute)),
        Err(e) => Err(e),
    }
}

/// Shortest path from the local node to `dest` with the link toward
/// `failed_next_hop` excluded.
pub fn route_recovery(
    state: &ProtocolState,
    failed_next_hop: NodeId,
    dest: NodeId,
    now: SimTime,
) -> Result<Path, RoutingError> {
    let mut graph = state.build_topology_graph(now);
    graph.remove_link(state.self_id, failed_next_hop);
    if !graph.contains_node(dest) {
        return Err(RoutingError::NoRoute(dest));
    }
    let tree = graph::dijkstra(&graph, state.self_id)?;
    Ok(graph::get_path(&tree, dest)?)
}

/// How the hop-by-hop baseline learns about broken links.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnipathVariant {
    /// Only through HELLO timeouts.
    Periodic,
    /// Also through link-layer failure notifications.
    Feedback,
}

/// Next-hop table from a plain Dijkstra over the local topology graph.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RoutingTable {
    pub next_hop: BTreeMap<NodeId, NodeId>,
}

impl RoutingTable {
    pub fn compute(state: &ProtocolState, now: SimTime) -> Self {
        let graph = state.build_topology_graph(now);
        let tree = graph::dijkstra(&graph, state.self_id).expect("self is always in its graph");
        let mut next_hop = BTreeMap::new();
        for &dest in tree.distance.keys() {
            if dest == state.self_id {
                continue;
            }
            let mut hop = dest;
            while let Some(&pred) = tree.predecessor.get(&hop) {
                if pred == state.self_id {
                    break;
                }
                hop = pred;
            }
            next_hop.insert(dest, hop);
        }
        Self { next_hop }
    }
}

/// Hop-by-hop OLSR router: the table is rebuilt whenever the topology
/// changes, and for [`UnipathVariant::Feedback`] also on link failure.
#[derive(Debug, Clone)]
pub struct UnipathRouter {
    pub variant: UnipathVariant,
    table: RoutingTable,
    generation: Option<u64>,
}

impl UnipathRouter {
    pub fn new(variant: UnipathVariant) -> Self {
        Self {
            variant,
            table: RoutingTable::default(),
            generation: None,
        }
    }

    pub fn next_hop(
        &mut self,
        state: &ProtocolState,
        dest: NodeId,
        now: SimTime,
    ) -> Result<NodeId, RoutingError> {
        let stale_entry = self
            .table
            .next_hop
            .get(&dest)
            .is_some_and(|&nh| !state.is_symmetric_neighbor(nh, now));
        if self.generation != Some(state.generation()) || stale_entry {
            self.table = RoutingTable::compute(state, now);
            self.generation = Some(state.generation());
        }
        self.table
            .next_hop
            .get(&dest)
            .copied()
            .ok_or(RoutingError::NoRoute(dest))
    }

    /// Handles a link-layer failure report. Returns whether the report was
    /// acted upon.
    pub fn on_link_failure(&mut self, state: &mut ProtocolState, neighbor: NodeId) -> bool {
        match self.variant {
            UnipathVariant::Periodic => false,
            UnipathVariant::Feedback => {
                state.remove_neighbor(neighbor);
                self.generation = None;
                true
            }
        }
    }

    pub fn table(&self) -> &RoutingTable {
        &self.table
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::olsr::{NeighborEntry, NeighborStatus, OlsrTimers, TcMessage};

    fn n(c: char) -> NodeId {
        NodeId(c as u32 - 'A' as u32)
    }

    fn route(s: &str) -> Vec<NodeId> {
        s.chars().map(n).collect()
    }

    fn state_with(self_id: char, neighbors: &str, links: &[(char, char)]) -> ProtocolState {
        let mut s = ProtocolState::new(n(self_id), OlsrTimers::default());
        for c in neighbors.chars() {
            s.neighbor_set.insert(
                n(c),
                NeighborEntry {
                    status: NeighborStatus::Symmetric,
                    expiry: SimTime::from_secs(100),
                },
            );
        }
        let mut by_origin: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for &(a, b) in links {
            by_origin.entry(n(a)).or_default().push(n(b));
        }
        for (origin, adv) in by_origin {
            s.process_tc(
                &TcMessage {
                    originator: origin,
                    advertised: adv,
                    sequence: 1,
                    validity: SimTime::from_secs(100),
                },
                SimTime::ZERO,
            )
            .unwrap();
        }
        s
    }

    fn packet_on(route: Vec<NodeId>, cursor: usize) -> DataPacket {
        DataPacket {
            flow_id: 0,
            sequence: 0,
            source: route[0],
            destination: *route.last().unwrap(),
            payload_size: 512,
            header: Some(SourceRouteHeader {
                route,
                cursor,
                recovery_count: 0,
            }),
            mdc: None,
            created_at: SimTime::ZERO,
            hop_count: cursor as u32,
        }
    }

    #[test]
    fn allocation_is_round_robin() {
        let paths: Vec<Path> = (0..3)
            .map(|i| Path {
                hops: vec![NodeId(0), NodeId(i + 1)],
                cost: 1.into(),
            })
            .collect();
        assert_eq!(allocate_route(0, &paths), &paths[0]);
        assert_eq!(allocate_route(5, &paths), &paths[2]);
        assert_eq!(allocate_route(7, &paths[..1]), &paths[0]);
    }

    #[test]
    fn forward_plain_cases() {
        let cfg = ForwardingConfig::default();
        let at_b = state_with('B', "AC", &[]);
        let d = forward(&at_b, &packet_on(route("ABCD"), 1), &cfg, SimTime::ZERO).unwrap();
        assert_eq!(d, ForwardDecision::ForwardTo(n('C')));

        let at_d = state_with('D', "C", &[]);
        let d = forward(&at_d, &packet_on(route("ABCD"), 3), &cfg, SimTime::ZERO).unwrap();
        assert_eq!(d, ForwardDecision::Deliver);

        let err = forward(&at_b, &packet_on(route("ABCD"), 2), &cfg, SimTime::ZERO).unwrap_err();
        assert_eq!(
            err,
            RoutingError::MisroutedPacket {
                at: n('B'),
                expected: n('C')
            }
        );
    }

    #[test]
    fn recovery_around_lost_neighbor() {
        let cfg = ForwardingConfig::default();
        // F lost G; it knows E and H as neighbors and H-D, G-D from TCs.
        let at_f = state_with('F', "EH", &[('D', 'H'), ('D', 'G'), ('E', 'A')]);
        let pkt = packet_on(route("AEFGD"), 2);
        let d = forward(&at_f, &pkt, &cfg, SimTime::ZERO).unwrap();
        assert_eq!(
            d,
            ForwardDecision::Recovered {
                new_route: route("FHD"),
                next_hop: n('H')
            }
        );
        let mut header = pkt.header.unwrap();
        header.splice(&route("FHD"));
        assert_eq!(header.route, route("AEFHD"));
        assert_eq!(header.cursor, 2);
        assert_eq!(header.recovery_count, 1);

        let no_recovery = ForwardingConfig {
            recovery_enabled: false,
            ..cfg
        };
        let d = forward(&at_f, &packet_on(route("AEFGD"), 2), &no_recovery, SimTime::ZERO).unwrap();
        assert_eq!(d, ForwardDecision::Drop(DropReason::NoRoute));
    }

    #[test]
    fn recovery_failures() {
        let cfg = ForwardingConfig::default();
        let at_f = state_with('F', "E", &[('E', 'A')]);
        let d = forward(&at_f, &packet_on(route("AEFGD"), 2), &cfg, SimTime::ZERO).unwrap();
        assert_eq!(d, ForwardDecision::Drop(DropReason::NoRoute));

        let at_f = state_with('F', "EH", &[('D', 'H')]);
        let mut pkt = packet_on(route("AEFGD"), 2);
        pkt.header.as_mut().unwrap().recovery_count = cfg.recovery_cap;
        let d = forward(&at_f, &pkt, &cfg, SimTime::ZERO).unwrap();
        assert_eq!(d, ForwardDecision::Drop(DropReason::RecoveryLimit));

        pkt.header.as_mut().unwrap().recovery_count = 0;
        pkt.hop_count = cfg.ttl;
        let d = forward(&at_f, &pkt, &cfg, SimTime::ZERO).unwrap();
        assert_eq!(d, ForwardDecision::Drop(DropReason::TtlExceeded));
    }

    #[test]
    fn recovery_excludes_failed_link() {
        // G is still a neighbor in F's view but the caller reports it dead.
        let at_f = state_with('F', "GH", &[('D', 'G'), ('D', 'H')]);
        let path = route_recovery(&at_f, n('G'), n('D'), SimTime::ZERO).unwrap();
        assert_eq!(path.hops, route("FHD"));
        let only = state_with('F', "G", &[('D', 'G')]);
        assert_eq!(
            route_recovery(&only, n('G'), n('D'), SimTime::ZERO),
            Err(RoutingError::NoRoute(n('D')))
        );
    }

    #[test]
    fn splice_drops_prefix_when_it_would_loop() {
        let mut h = SourceRouteHeader {
            route: route("ABCD"),
            cursor: 2,
            recovery_count: 0,
        };
        h.splice(&route("CBED"));
        assert_eq!(h.route, route("CBED"));
        assert_eq!(h.cursor, 0);
        assert_eq!(h.current(), n('C'));
    }

    #[test]
    fn compute_routes_cases() {
        let policy = CostPolicy::doubling();
        let s = state_with('A', "BF", &[('B', 'C'), ('C', 'D'), ('D', 'E'), ('F', 'G'), ('G', 'D')]);
        let routes = compute_routes(&s, n('E'), 2, &policy, SimTime::ZERO).unwrap();
        assert_eq!(routes[0].hops, route("ABCDE"));
        assert_eq!(routes[1].hops, route("AFGDE"));

        let s = state_with('A', "B", &[]);
        let routes = compute_routes(&s, n('B'), 3, &policy, SimTime::ZERO).unwrap();
        assert!(routes.iter().all(|p| p.hops == route("AB")));
        assert_eq!(
            compute_routes(&s, n('Z'), 3, &policy, SimTime::ZERO),
            Err(RoutingError::NoRoute(n('Z')))
        );
    }

    #[test]
    fn cache_follows_generation() {
        let policy = CostPolicy::doubling();
        let mut s = state_with('A', "B", &[('B', 'C')]);
        let mut cache = RouteCache::new();
        cache.routes(&s, n('C'), 2, &policy, SimTime::ZERO).unwrap();
        cache.routes(&s, n('C'), 2, &policy, SimTime::ZERO).unwrap();
        assert_eq!(cache.computations, 1);
        s.remove_neighbor(n('B'));
        assert!(cache.routes(&s, n('C'), 2, &policy, SimTime::ZERO).is_err());
        assert_eq!(cache.computations, 2);
    }

    #[test]
    fn unipath_feedback_reroutes() {
        // A-B-C and A-X-C; B is preferred on the tie.
        let mut s = state_with('A', "BX", &[('C', 'B'), ('C', 'X')]);
        let mut periodic = UnipathRouter::new(UnipathVariant::Periodic);
        let mut feedback = UnipathRouter::new(UnipathVariant::Feedback);
        assert_eq!(periodic.next_hop(&s, n('C'), SimTime::ZERO), Ok(n('B')));
        assert_eq!(feedback.next_hop(&s, n('C'), SimTime::ZERO), Ok(n('B')));

        let mut s2 = s.clone();
        assert!(!periodic.on_link_failure(&mut s2, n('B')));
        assert_eq!(periodic.next_hop(&s2, n('C'), SimTime::ZERO), Ok(n('B')));

        assert!(feedback.on_link_failure(&mut s, n('B')));
        assert_eq!(feedback.next_hop(&s, n('C'), SimTime::ZERO), Ok(n('X')));
        assert_eq!(
            feedback.next_hop(&s, n('Q'), SimTime::ZERO),
            Err(RoutingError::NoRoute(n('Q')))
        );
    }

    #[test]
    fn unipath_linear() {
        let s = state_with('A', "B", &[('C', 'B')]);
        let mut r = UnipathRouter::new(UnipathVariant::Periodic);
        assert_eq!(r.next_hop(&s, n('C'), SimTime::ZERO), Ok(n('B')));
    }
}
