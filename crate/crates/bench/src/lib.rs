//! Fixtures shared by the benchmarks.

use mpolsr::{Cost, NodeId, TopologyGraph};
use rand::Rng;

/// Random geometric graph: `n` nodes in a unit square, linked when closer
/// than `radius`, with integer costs in `1..=max_cost`.
pub fn random_geometric_graph<R: Rng>(rng: &mut R, n: u32, radius: f64, max_cost: u64) -> TopologyGraph {
    let points: Vec<(f64, f64)> = (0..n).map(|_| (rng.random(), rng.random())).collect();
    let mut g = TopologyGraph::new();
    for i in 0..n {
        g.add_node(NodeId(i));
    }
    for i in 0..n as usize {
        for j in i + 1..n as usize {
            let (a, b) = (points[i], points[j]);
            if (a.0 - b.0).hypot(a.1 - b.1) <= radius {
                let c = Cost::from_integer(rng.random_range(1..=max_cost));
                g.add_link(NodeId(i as u32), NodeId(j as u32), c)
                    .expect("costs are positive");
            }
        }
    }
    g
}

pub fn random_payload<R: Rng>(rng: &mut R, len: usize) -> Vec<u8> {
    (0..len).map(|_| rng.random()).collect()
}
