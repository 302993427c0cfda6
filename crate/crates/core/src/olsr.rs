//! Per-node topology sensing: HELLO/TC generation and processing, neighbor
//! and two-hop tracking, MPR selection and the local topology graph.
//!
//! Entries are valid while `expiry >= now`. Read operations that take a
//! `now` ignore anything already past its expiry, so callers never see
//! stale information even between expiry sweeps.

use std::collections::{BTreeMap, BTreeSet};

use log::debug;
use thiserror::Error;

use crate::graph::{Cost, NodeId, TopologyGraph};
use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OlsrError {
    #[error("message originated by this node")]
    SelfMessage,
    #[error("stale TC from {originator}: sequence {received} older than {stored}")]
    StaleMessage {
        originator: NodeId,
        received: u64,
        stored: u64,
    },
}

/// Link status advertised in a HELLO.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LinkStatus {
    Asymmetric,
    Symmetric,
    Mpr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NeighborStatus {
    Asymmetric,
    Symmetric,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HelloMessage {
    pub originator: NodeId,
    pub listed_neighbors: Vec<(NodeId, LinkStatus)>,
    pub validity: SimTime,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TcMessage {
    pub originator: NodeId,
    /// The originator's MPR selectors.
    pub advertised: Vec<NodeId>,
    pub sequence: u64,
    pub validity: SimTime,
}

/// Emission intervals and hold times.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OlsrTimers {
    pub hello_interval: SimTime,
    pub tc_interval: SimTime,
    pub neighbor_hold: SimTime,
    pub topology_hold: SimTime,
}

impl OlsrTimers {
    pub fn new(hello_interval: SimTime, tc_interval: SimTime, validity_multiplier: u64) -> Self {
        Self {
            hello_interval,
            tc_interval,
            neighbor_hold: SimTime(hello_interval.0 * validity_multiplier),
            topology_hold: SimTime(tc_interval.0 * validity_multiplier),
        }
    }
}

impl Default for OlsrTimers {
    /// HELLO every 2 s, TC every 5 s, hold times three intervals.
    fn default() -> Self {
        Self::new(SimTime::from_secs(2), SimTime::from_secs(5), 3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NeighborEntry {
    pub status: NeighborStatus,
    pub expiry: SimTime,
}

/// Everything learned from one originator's latest TC.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopologyEntry {
    pub sequence: u64,
    pub expiry: SimTime,
    pub advertised: BTreeSet<NodeId>,
}

/// Flattened topology tuple `(dest, last_hop, sequence, expiry)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct TopologyTuple {
    pub dest: NodeId,
    pub last_hop: NodeId,
    pub sequence: u64,
    pub expiry: SimTime,
}

/// `(originator, sequence)` pairs already considered for flooding.
#[derive(Debug, Clone, Default)]
pub struct DuplicateSet {
    entries: BTreeMap<(NodeId, u64), SimTime>,
}

impl DuplicateSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, originator: NodeId, sequence: u64) -> bool {
        self.entries.contains_key(&(originator, sequence))
    }

    pub fn insert(&mut self, originator: NodeId, sequence: u64, expiry: SimTime) {
        self.entries.insert((originator, sequence), expiry);
    }

    pub fn expire(&mut self, now: SimTime) {
        self.entries.retain(|_, expiry| *expiry >= now);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// OLSR information bases of a single node.
#[derive(Debug, Clone)]
pub struct ProtocolState {
    pub self_id: NodeId,
    pub timers: OlsrTimers,
    pub neighbor_set: BTreeMap<NodeId, NeighborEntry>,
    /// `(neighbor, two_hop) -> expiry`.
    pub two_hop_set: BTreeMap<(NodeId, NodeId), SimTime>,
    pub mpr_set: BTreeSet<NodeId>,
    pub mpr_selector_set: BTreeMap<NodeId, SimTime>,
    /// Keyed by TC originator, i.e. the `last_hop` of every tuple it yields.
    pub topology_set: BTreeMap<NodeId, TopologyEntry>,
    pub stale_tc_count: u64,
    tc_sequence: u64,
    generation: u64,
}

impl ProtocolState {
    pub fn new(self_id: NodeId, timers: OlsrTimers) -> Self {
        Self {
            self_id,
            timers,
            neighbor_set: BTreeMap::new(),
            two_hop_set: BTreeMap::new(),
            mpr_set: BTreeSet::new(),
            mpr_selector_set: BTreeMap::new(),
            topology_set: BTreeMap::new(),
            stale_tc_count: 0,
            tc_sequence: 0,
            generation: 0,
        }
    }

    /// Bumped on every change to the neighbor, two-hop or topology sets.
    /// Route caches compare against it.
    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn is_symmetric_neighbor(&self, node: NodeId, now: SimTime) -> bool {
        self.neighbor_set
            .get(&node)
            .is_some_and(|e| e.status == NeighborStatus::Symmetric && e.expiry >= now)
    }

    pub fn symmetric_neighbors(&self, now: SimTime) -> impl Iterator<Item = NodeId> + '_ {
        self.neighbor_set
            .iter()
            .filter(move |(_, e)| e.status == NeighborStatus::Symmetric && e.expiry >= now)
            .map(|(&n, _)| n)
    }

    pub fn topology_tuples(&self) -> impl Iterator<Item = TopologyTuple> + '_ {
        self.topology_set.iter().flat_map(|(&last_hop, entry)| {
            entry.advertised.iter().map(move |&dest| TopologyTuple {
                dest,
                last_hop,
                sequence: entry.sequence,
                expiry: entry.expiry,
            })
        })
    }

    pub fn generate_hello(&self, now: SimTime) -> HelloMessage {
        let listed_neighbors = self
            .neighbor_set
            .iter()
            .filter(|(_, e)| e.expiry >= now)
            .map(|(&n, e)| {
                let status = match e.status {
                    NeighborStatus::Asymmetric => LinkStatus::Asymmetric,
                    NeighborStatus::Symmetric if self.mpr_set.contains(&n) => LinkStatus::Mpr,
                    NeighborStatus::Symmetric => LinkStatus::Symmetric,
                };
                (n, status)
            })
            .collect();
        HelloMessage {
            originator: self.self_id,
            listed_neighbors,
            validity: self.timers.neighbor_hold,
        }
    }

    /// Builds the next TC, advertising the current MPR selectors.
    pub fn generate_tc(&mut self, now: SimTime) -> TcMessage {
        self.tc_sequence += 1;
        TcMessage {
            originator: self.self_id,
            advertised: self.mpr_selectors(now).collect(),
            sequence: self.tc_sequence,
            validity: self.timers.topology_hold,
        }
    }

    pub fn mpr_selectors(&self, now: SimTime) -> impl Iterator<Item = NodeId> + '_ {
        self.mpr_selector_set
            .iter()
            .filter(move |(_, &expiry)| expiry >= now)
            .map(|(&n, _)| n)
    }

    pub fn process_hello(&mut self, msg: &HelloMessage, now: SimTime) -> Result<(), OlsrError> {
        if msg.originator == self.self_id {
            debug!("node {}: ignoring own HELLO", self.self_id);
            return Err(OlsrError::SelfMessage);
        }
        let origin = msg.originator;
        let expiry = now + msg.validity;
        let listed_me = msg
            .listed_neighbors
            .iter()
            .find(|(n, _)| *n == self.self_id)
            .map(|&(_, s)| s);
        let status = if listed_me.is_some() {
            NeighborStatus::Symmetric
        } else {
            NeighborStatus::Asymmetric
        };

        let mut changed = false;
        match self.neighbor_set.insert(origin, NeighborEntry { status, expiry }) {
            Some(prev) if prev.status == status => {}
            _ => changed = true,
        }

        let reachable: BTreeSet<NodeId> = if status == NeighborStatus::Symmetric {
            msg.listed_neighbors
                .iter()
                .filter(|(n, s)| *n != self.self_id && *s != LinkStatus::Asymmetric)
                .map(|&(n, _)| n)
                .collect()
        } else {
            BTreeSet::new()
        };
        let before = self.two_hop_set.len();
        self.two_hop_set
            .retain(|&(via, two_hop), _| via != origin || reachable.contains(&two_hop));
        changed |= before != self.two_hop_set.len();
        for two_hop in reachable {
            changed |= self.two_hop_set.insert((origin, two_hop), expiry).is_none();
        }

        if listed_me == Some(LinkStatus::Mpr) {
            self.mpr_selector_set.insert(origin, expiry);
        } else {
            self.mpr_selector_set.remove(&origin);
        }

        if changed {
            self.generation += 1;
            self.mpr_set = self.select_mprs();
        }
        Ok(())
    }

    /// Greedy MPR selection over the current neighbor and two-hop sets.
    ///
    /// Neighbors that are the only way to reach some strict two-hop node
    /// are taken first; the rest are added by decreasing number of newly
    /// covered nodes, ties going to the smallest id.
    pub fn select_mprs(&self) -> BTreeSet<NodeId> {
        let symmetric: BTreeSet<NodeId> = self
            .neighbor_set
            .iter()
            .filter(|(_, e)| e.status == NeighborStatus::Symmetric)
            .map(|(&n, _)| n)
            .collect();

        let mut coverage: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
        let mut covered_by: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
        for &(via, two_hop) in self.two_hop_set.keys() {
            if two_hop == self.self_id || symmetric.contains(&two_hop) {
                continue;
            }
            if !symmetric.contains(&via) {
                debug!(
                    "node {}: two-hop {} via non-symmetric {} ignored",
                    self.self_id, two_hop, via
                );
                continue;
            }
            coverage.entry(via).or_default().insert(two_hop);
            covered_by.entry(two_hop).or_default().insert(via);
        }

        let mut mprs = BTreeSet::new();
        let mut uncovered: BTreeSet<NodeId> = covered_by.keys().copied().collect();
        for vias in covered_by.values() {
            if vias.len() == 1 {
                mprs.insert(*vias.iter().next().unwrap());
            }
        }
        for mpr in &mprs {
            for t in &coverage[mpr] {
                uncovered.remove(t);
            }
        }

        while !uncovered.is_empty() {
            let best = coverage
                .iter()
                .filter(|(n, _)| !mprs.contains(*n))
                .map(|(&n, reach)| (reach.intersection(&uncovered).count(), n))
                .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
            match best {
                Some((gain, n)) if gain > 0 => {
                    for t in &coverage[&n] {
                        uncovered.remove(t);
                    }
                    mprs.insert(n);
                }
                _ => break,
            }
        }
        mprs
    }

    pub fn process_tc(&mut self, msg: &TcMessage, now: SimTime) -> Result<(), OlsrError> {
        if msg.originator == self.self_id {
            return Err(OlsrError::SelfMessage);
        }
        if let Some(entry) = self.topology_set.get(&msg.originator) {
            if entry.expiry >= now && entry.sequence > msg.sequence {
                self.stale_tc_count += 1;
                return Err(OlsrError::StaleMessage {
                    originator: msg.originator,
                    received: msg.sequence,
                    stored: entry.sequence,
                });
            }
        }
        let advertised: BTreeSet<NodeId> = msg.advertised.iter().copied().collect();
        let entry = TopologyEntry {
            sequence: msg.sequence,
            expiry: now + msg.validity,
            advertised,
        };
        let changed = self
            .topology_set
            .get(&msg.originator)
            .is_none_or(|prev| prev.advertised != entry.advertised);
        self.topology_set.insert(msg.originator, entry);
        if changed {
            self.generation += 1;
        }
        Ok(())
    }

    /// MPR flooding rule: retransmit only first sightings relayed by one of
    /// our MPR selectors.
    pub fn should_forward_flood(
        &self,
        msg: &TcMessage,
        previous_hop: NodeId,
        seen: &DuplicateSet,
        now: SimTime,
    ) -> bool {
        self.mpr_selector_set
            .get(&previous_hop)
            .is_some_and(|&expiry| expiry >= now)
            && !seen.contains(msg.originator, msg.sequence)
    }

    /// Unit-cost graph over everything this node currently knows.
    pub fn build_topology_graph(&self, now: SimTime) -> TopologyGraph {
        let one = Cost::from_integer(1);
        let mut graph = TopologyGraph::new();
        graph.add_node(self.self_id);
        for n in self.symmetric_neighbors(now) {
            let _ = graph.add_link(self.self_id, n, one);
        }
        for (&(via, two_hop), &expiry) in &self.two_hop_set {
            if expiry >= now && self.is_symmetric_neighbor(via, now) {
                let _ = graph.add_link(via, two_hop, one);
            }
        }
        for tuple in self.topology_tuples() {
            if tuple.expiry >= now {
                let _ = graph.add_link(tuple.last_hop, tuple.dest, one);
            }
        }
        graph
    }

    /// Drops every entry whose expiry precedes `now`.
    pub fn expire(&mut self, now: SimTime) {
        let mut changed = false;
        let dead: Vec<NodeId> = self
            .neighbor_set
            .iter()
            .filter(|(_, e)| e.expiry < now)
            .map(|(&n, _)| n)
            .collect();
        for n in &dead {
            self.neighbor_set.remove(n);
            changed = true;
        }
        let before = self.two_hop_set.len();
        self.two_hop_set
            .retain(|(via, _), expiry| *expiry >= now && !dead.contains(via));
        changed |= before != self.two_hop_set.len();
        self.mpr_selector_set.retain(|_, expiry| *expiry >= now);

        let before = self.topology_set.len();
        self.topology_set.retain(|_, e| e.expiry >= now);
        let topology_changed = before != self.topology_set.len();

        if changed || topology_changed {
            self.generation += 1;
        }
        if changed {
            self.mpr_set = self.select_mprs();
        }
    }

    /// Forgets a neighbor after a link-layer failure report.
    pub fn remove_neighbor(&mut self, node: NodeId) -> bool {
        if self.neighbor_set.remove(&node).is_none() {
            return false;
        }
        self.two_hop_set.retain(|(via, _), _| *via != node);
        self.mpr_selector_set.remove(&node);
        self.generation += 1;
        self.mpr_set = self.select_mprs();
        true
    }
}
