mod common;

use common::*;
use mpolsr::graph::apply_penalties;
use mpolsr::{dijkstra, get_path, multipath_dijkstra, Cost, CostPolicy, NodeId};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn graph_strategy() -> impl Strategy<Value = (u64, u32)> {
    (any::<u64>(), 2u32..=10)
}

#[test]
fn dijkstra_distances_match_bellman_ford() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let size = rand::Rng::random_range(&mut rng, 2..=25);
        let g = random_connected_graph(&mut rng, size, 0.15, 9);
        let tree = dijkstra(&g, n(0)).unwrap();
        assert_eq!(tree.distance, bellman_ford(&g, n(0)));
        for v in g.nodes() {
            let p = get_path(&tree, v).unwrap();
            let sum = p
                .arcs()
                .map(|(a, b)| g.cost(a, b).unwrap())
                .fold(c(0), |acc, w| acc + w);
            assert_eq!(sum, p.cost);
        }
    }
}

#[test]
fn multipath_matches_exhaustive_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let policy = CostPolicy::doubling();
    for _ in 0..50 {
        let size = rand::Rng::random_range(&mut rng, 3..=12);
        let g = random_connected_graph(&mut rng, size, 0.25, 3);
        let dest = n(size - 1);
        let routes = multipath_dijkstra(n(0), dest, &g, 4, &policy).unwrap();
        let mut arcs = arc_map(&g);
        for route in &routes {
            let (cost, hops) = best_simple_path(&arcs, n(0), dest).unwrap();
            assert_eq!(route.hops, hops);
            assert_eq!(route.cost, cost);
            arcs = penalize(&arcs, &hops, c(2), c(2));
        }
    }
}

#[test]
fn penalties_match_reference_rule() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let policy = CostPolicy::new(c(3), Cost::new(3, 2)).unwrap();
    for _ in 0..100 {
        let g = random_connected_graph(&mut rng, 9, 0.3, 5);
        let p = get_path(&dijkstra(&g, n(0)).unwrap(), n(8)).unwrap();
        let next = apply_penalties(&g, &p, &policy);
        assert_eq!(arc_map(&next), penalize(&arc_map(&g), &p.hops, c(3), Cost::new(3, 2)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn first_route_is_plain_shortest_path((seed, size) in graph_strategy(), k in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_connected_graph(&mut rng, size, 0.3, 4);
        let dest = n(size - 1);
        let routes = multipath_dijkstra(n(0), dest, &g, k, &CostPolicy::doubling()).unwrap();
        prop_assert_eq!(routes.len(), k);
        prop_assert_eq!(&routes[0], &get_path(&dijkstra(&g, n(0)).unwrap(), dest).unwrap());
    }

    #[test]
    fn routes_are_simple_and_valid((seed, size) in graph_strategy(), k in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_connected_graph(&mut rng, size, 0.3, 4);
        let dest = n(size - 1);
        for r in multipath_dijkstra(n(0), dest, &g, k, &CostPolicy::doubling()).unwrap() {
            let distinct: std::collections::BTreeSet<NodeId> = r.hops.iter().copied().collect();
            prop_assert_eq!(distinct.len(), r.hops.len());
            prop_assert_eq!(r.source(), n(0));
            prop_assert_eq!(r.destination(), dest);
            for (a, b) in r.arcs() {
                prop_assert!(g.cost(a, b).is_some());
            }
        }
    }

    #[test]
    fn penalized_costs_never_decrease(
        (seed, size) in graph_strategy(),
        fp in 1u64..4,
        fe in 1u64..4,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_connected_graph(&mut rng, size, 0.3, 4);
        let policy = CostPolicy::new(c(fp), c(fe)).unwrap();
        let mut cur = g;
        for _ in 0..4 {
            let p = get_path(&dijkstra(&cur, n(0)).unwrap(), n(size - 1)).unwrap();
            let next = apply_penalties(&cur, &p, &policy);
            for (t, h, w) in cur.arcs() {
                prop_assert!(next.cost(t, h).unwrap() >= w);
            }
            cur = next;
        }
    }

    #[test]
    fn identity_policy_repeats_first_route((seed, size) in graph_strategy(), k in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_connected_graph(&mut rng, size, 0.3, 4);
        let routes = multipath_dijkstra(n(0), n(size - 1), &g, k, &CostPolicy::identity()).unwrap();
        for r in &routes {
            prop_assert_eq!(r, &routes[0]);
        }
    }

    #[test]
    fn multipath_is_deterministic((seed, size) in graph_strategy(), k in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_connected_graph(&mut rng, size, 0.3, 4);
        let a = multipath_dijkstra(n(0), n(size - 1), &g, k, &CostPolicy::doubling()).unwrap();
        let b = multipath_dijkstra(n(0), n(size - 1), &g.clone(), k, &CostPolicy::doubling()).unwrap();
        prop_assert_eq!(a, b);
    }
}
