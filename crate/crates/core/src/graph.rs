//! Weighted directed topology graphs, Dijkstra source trees and the
//! multipath Dijkstra route search.
//!
//! Costs are exact rationals so that repeated penalization never drifts.
//! Every search is deterministic: among equal-cost candidates the smallest
//! [`NodeId`] wins, both at heap extraction and at predecessor selection.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;

use num_rational::Ratio;
use thiserror::Error;

/// Arc cost. Always strictly positive inside a [`TopologyGraph`].
pub type Cost = Ratio<u64>;

/// Opaque node identifier. The derived order is the tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for NodeId {
    fn from(v: u32) -> Self {
        NodeId(v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("source node {0} is not in the graph")]
    UnknownSource(NodeId),
    #[error("no route to node {0}")]
    NoRoute(NodeId),
    #[error("arc {0} -> {1} is a self loop")]
    SelfLoop(NodeId, NodeId),
    #[error("arc {0} -> {1} has a non-positive cost")]
    NonPositiveCost(NodeId, NodeId),
}

/// Directed graph with positive rational arc costs.
///
/// An undirected radio link is two arcs; after penalization the two
/// directions may carry different costs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TopologyGraph {
    nodes: BTreeSet<NodeId>,
    arcs: BTreeMap<(NodeId, NodeId), Cost>,
}

impl TopologyGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, node: NodeId) {
        self.nodes.insert(node);
    }

    /// Inserts or overwrites the arc `tail -> head`, adding both endpoints.
    pub fn add_arc(&mut self, tail: NodeId, head: NodeId, cost: Cost) -> Result<(), GraphError> {
        if tail == head {
            return Err(GraphError::SelfLoop(tail, head));
        }
        if cost <= Cost::from_integer(0) {
            return Err(GraphError::NonPositiveCost(tail, head));
        }
        self.nodes.insert(tail);
        self.nodes.insert(head);
        self.arcs.insert((tail, head), cost);
        Ok(())
    }

    /// Adds both directions of a link with the same cost.
    pub fn add_link(&mut self, a: NodeId, b: NodeId, cost: Cost) -> Result<(), GraphError> {
        self.add_arc(a, b, cost)?;
        self.add_arc(b, a, cost)
    }

    pub fn remove_arc(&mut self, tail: NodeId, head: NodeId) -> Option<Cost> {
        self.arcs.remove(&(tail, head))
    }

    /// Removes both directions of the link between `a` and `b`.
    pub fn remove_link(&mut self, a: NodeId, b: NodeId) {
        self.arcs.remove(&(a, b));
        self.arcs.remove(&(b, a));
    }

    pub fn contains_node(&self, node: NodeId) -> bool {
        self.nodes.contains(&node)
    }

    pub fn cost(&self, tail: NodeId, head: NodeId) -> Option<Cost> {
        self.arcs.get(&(tail, head)).copied()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().copied()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn arcs(&self) -> impl Iterator<Item = (NodeId, NodeId, Cost)> + '_ {
        self.arcs.iter().map(|(&(t, h), &c)| (t, h, c))
    }

    /// Outgoing arcs of `tail`, in ascending head order.
    pub fn out_arcs(&self, tail: NodeId) -> impl Iterator<Item = (NodeId, Cost)> + '_ {
        self.arcs
            .range((tail, NodeId(0))..=(tail, NodeId(u32::MAX)))
            .map(|(&(_, h), &c)| (h, c))
    }
}

/// Shortest-path tree rooted at `root`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceTree {
    pub root: NodeId,
    pub predecessor: BTreeMap<NodeId, NodeId>,
    pub distance: BTreeMap<NodeId, Cost>,
}

/// A simple path with its cost in the graph it was computed in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub hops: Vec<NodeId>,
    pub cost: Cost,
}

impl Path {
    pub fn source(&self) -> NodeId {
        self.hops[0]
    }

    pub fn destination(&self) -> NodeId {
        *self.hops.last().expect("path is never empty")
    }

    pub fn hop_count(&self) -> usize {
        self.hops.len() - 1
    }

    /// Directed arcs traversed by the path.
    pub fn arcs(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.hops.windows(2).map(|w| (w[0], w[1]))
    }
}

/// Multipliers applied by the incremental cost functions: `fp` to arcs on
/// the previous path (or whose reverse is), `fe` to arcs entering one of
/// its intermediate vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostPolicy {
    pub fp_multiplier: Cost,
    pub fe_multiplier: Cost,
}

impl CostPolicy {
    /// Returns `None` when a multiplier is below one.
    pub fn new(fp_multiplier: Cost, fe_multiplier: Cost) -> Option<Self> {
        let one = Cost::from_integer(1);
        (fp_multiplier >= one && fe_multiplier >= one).then_some(Self {
            fp_multiplier,
            fe_multiplier,
        })
    }

    /// `f_p(c) = f_e(c) = 2c`.
    pub fn doubling() -> Self {
        Self {
            fp_multiplier: Cost::from_integer(2),
            fe_multiplier: Cost::from_integer(2),
        }
    }

    pub fn identity() -> Self {
        Self {
            fp_multiplier: Cost::from_integer(1),
            fe_multiplier: Cost::from_integer(1),
        }
    }
}

impl Default for CostPolicy {
    fn default() -> Self {
        Self::doubling()
    }
}

/// Standard Dijkstra from `source`.
///
/// Nodes are settled in `(distance, id)` order. A node's predecessor is the
/// smallest-id node among all its optimal predecessors.
pub fn dijkstra(graph: &TopologyGraph, source: NodeId) -> Result<SourceTree, GraphError> {
    if !graph.contains_node(source) {
        return Err(GraphError::UnknownSource(source));
    }
    let mut distance: BTreeMap<NodeId, Cost> = BTreeMap::new();
    let mut predecessor: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    let mut settled: BTreeSet<NodeId> = BTreeSet::new();
    let mut heap = BinaryHeap::new();

    distance.insert(source, Cost::from_integer(0));
    heap.push(Reverse((Cost::from_integer(0), source)));

    while let Some(Reverse((dist_u, u))) = heap.pop() {
        if !settled.insert(u) {
            continue;
        }
        for (v, cost) in graph.out_arcs(u) {
            if settled.contains(&v) {
                continue;
            }
            let candidate = dist_u + cost;
            match distance.get(&v) {
                Some(&known) if candidate > known => {}
                Some(&known) if candidate == known => {
                    // `u` is settled after any earlier tied predecessor only
                    // if its id is larger, so keep the minimum.
                    let pred = predecessor.entry(v).or_insert(u);
                    if u < *pred {
                        *pred = u;
                    }
                }
                _ => {
                    distance.insert(v, candidate);
                    predecessor.insert(v, u);
                    heap.push(Reverse((candidate, v)));
                }
            }
        }
    }

    Ok(SourceTree {
        root: source,
        predecessor,
        distance,
    })
}

/// Reads the root-to-`dest` path off a source tree.
pub fn get_path(tree: &SourceTree, dest: NodeId) -> Result<Path, GraphError> {
    let cost = *tree.distance.get(&dest).ok_or(GraphError::NoRoute(dest))?;
    let mut hops = vec![dest];
    let mut cursor = dest;
    while cursor != tree.root {
        cursor = *tree
            .predecessor
            .get(&cursor)
            .ok_or(GraphError::NoRoute(dest))?;
        hops.push(cursor);
    }
    hops.reverse();
    Ok(Path { hops, cost })
}

/// Builds `G_{i+1}` from `G_i` and the path `P_i` found in it.
///
/// Arcs on the path, or whose reverse is on it, are scaled by `fp`. Other
/// arcs entering an intermediate vertex of the path are scaled by `fe`.
/// Arcs entering the path endpoints are not touched by `fe`.
pub fn apply_penalties(graph: &TopologyGraph, path: &Path, policy: &CostPolicy) -> TopologyGraph {
    let on_path: BTreeSet<(NodeId, NodeId)> = path.arcs().collect();
    let intermediate: BTreeSet<NodeId> = path
        .hops
        .iter()
        .skip(1)
        .take(path.hops.len().saturating_sub(2))
        .copied()
        .collect();

    let mut next = graph.clone();
    for (&(tail, head), cost) in next.arcs.iter_mut() {
        if on_path.contains(&(tail, head)) || on_path.contains(&(head, tail)) {
            *cost *= policy.fp_multiplier;
        } else if intermediate.contains(&head) {
            *cost *= policy.fe_multiplier;
        }
    }
    next
}

/// Iterated Dijkstra returning exactly `n_routes` paths from `source` to
/// `dest`.
///
/// Path `i` is the shortest path in the graph penalized by paths `1..i`.
/// Paths may repeat when no cheaper alternative exists. Fails with
/// [`GraphError::NoRoute`] only when `dest` is unreachable in the original
/// graph, in which case nothing is returned.
pub fn multipath_dijkstra(
    source: NodeId,
    dest: NodeId,
    graph: &TopologyGraph,
    n_routes: usize,
    policy: &CostPolicy,
) -> Result<Vec<Path>, GraphError> {
    let mut paths = Vec::with_capacity(n_routes);
    let mut current = graph.clone();
    for step in 0..n_routes {
        let tree = dijkstra(&current, source)?;
        let path = get_path(&tree, dest)?;
        if step + 1 < n_routes {
            current = apply_penalties(&current, &path, policy);
        }
        paths.push(path);
    }
    Ok(paths)
}
