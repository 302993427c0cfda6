//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use mpolsr::{Cost, NodeId, TopologyGraph};
use rand::Rng;

pub fn n(i: u32) -> NodeId {
    NodeId(i)
}

pub fn c(v: u64) -> Cost {
    Cost::from_integer(v)
}

/// Arc list as a plain map, so the oracles never touch library code paths.
pub fn arc_map(g: &TopologyGraph) -> BTreeMap<(NodeId, NodeId), Cost> {
    g.arcs().map(|(t, h, c)| ((t, h), c)).collect()
}

/// Bellman-Ford distances from `source`.
pub fn bellman_ford(g: &TopologyGraph, source: NodeId) -> BTreeMap<NodeId, Cost> {
    let arcs = arc_map(g);
    let mut dist: BTreeMap<NodeId, Cost> = BTreeMap::new();
    dist.insert(source, c(0));
    for _ in 0..g.node_count() {
        let mut changed = false;
        for (&(t, h), &w) in &arcs {
            if let Some(&dt) = dist.get(&t) {
                let cand = dt + w;
                if dist.get(&h).is_none_or(|&dh| cand < dh) {
                    dist.insert(h, cand);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    dist
}

/// Every node-simple path from `s` to `d`, with its cost.
pub fn all_simple_paths(
    arcs: &BTreeMap<(NodeId, NodeId), Cost>,
    s: NodeId,
    d: NodeId,
) -> Vec<(Cost, Vec<NodeId>)> {
    let mut adj: BTreeMap<NodeId, Vec<(NodeId, Cost)>> = BTreeMap::new();
    for (&(t, h), &w) in arcs {
        adj.entry(t).or_default().push((h, w));
    }
    let mut out = Vec::new();
    let mut stack = vec![s];
    let mut on: BTreeSet<NodeId> = BTreeSet::from([s]);
    fn walk(
        adj: &BTreeMap<NodeId, Vec<(NodeId, Cost)>>,
        d: NodeId,
        cost: Cost,
        stack: &mut Vec<NodeId>,
        on: &mut BTreeSet<NodeId>,
        out: &mut Vec<(Cost, Vec<NodeId>)>,
    ) {
        let u = *stack.last().unwrap();
        if u == d {
            out.push((cost, stack.clone()));
            return;
        }
        for &(v, w) in adj.get(&u).map(|v| v.as_slice()).unwrap_or(&[]) {
            if on.insert(v) {
                stack.push(v);
                walk(adj, d, cost + w, stack, on, out);
                stack.pop();
                on.remove(&v);
            }
        }
    }
    walk(&adj, d, c(0), &mut stack, &mut on, &mut out);
    out
}

/// Minimum-cost simple path; ties go to the lexicographically smallest
/// hop list read from the destination backwards.
pub fn best_simple_path(
    arcs: &BTreeMap<(NodeId, NodeId), Cost>,
    s: NodeId,
    d: NodeId,
) -> Option<(Cost, Vec<NodeId>)> {
    all_simple_paths(arcs, s, d).into_iter().min_by(|a, b| {
        let ra: Vec<_> = a.1.iter().rev().collect();
        let rb: Vec<_> = b.1.iter().rev().collect();
        a.0.cmp(&b.0).then(ra.cmp(&rb))
    })
}

/// Penalizes `arcs` after `path` was chosen: arcs on the path in either
/// direction get `fp`, arcs into an interior path node get `fe`.
pub fn penalize(
    arcs: &BTreeMap<(NodeId, NodeId), Cost>,
    path: &[NodeId],
    fp: Cost,
    fe: Cost,
) -> BTreeMap<(NodeId, NodeId), Cost> {
    let used: BTreeSet<(NodeId, NodeId)> = path
        .windows(2)
        .flat_map(|w| [(w[0], w[1]), (w[1], w[0])])
        .collect();
    let interior: BTreeSet<NodeId> = path[1..path.len() - 1].iter().copied().collect();
    arcs.iter()
        .map(|(&(t, h), &w)| {
            let w = if used.contains(&(t, h)) {
                w * fp
            } else if interior.contains(&h) {
                w * fe
            } else {
                w
            };
            ((t, h), w)
        })
        .collect()
}

/// Connected random graph: a random spanning tree plus extra links, each
/// arc direction with its own cost in `1..=max_cost`.
pub fn random_connected_graph<R: Rng>(rng: &mut R, nodes: u32, extra_p: f64, max_cost: u64) -> TopologyGraph {
    let mut g = TopologyGraph::new();
    g.add_node(n(0));
    let arc = |g: &mut TopologyGraph, a: u32, b: u32, rng: &mut R| {
        g.add_arc(n(a), n(b), c(rng.random_range(1..=max_cost))).unwrap();
        g.add_arc(n(b), n(a), c(rng.random_range(1..=max_cost))).unwrap();
    };
    for i in 1..nodes {
        let parent = rng.random_range(0..i);
        arc(&mut g, parent, i, rng);
    }
    for a in 0..nodes {
        for b in a + 1..nodes {
            if g.cost(n(a), n(b)).is_none() && rng.random_bool(extra_p) {
                arc(&mut g, a, b, rng);
            }
        }
    }
    g
}
