use std::collections::VecDeque;

use proptest::prelude::*;

use agent_society::graph::{
    build_complete, build_random_graph, build_ring_lattice, build_small_world, compute_metrics, read_edge_list,
    rewire_small_world, simulate_dissemination, write_edge_list, RelationGraph, TopologyKind, TransmissionRule,
};

/// Mean BFS distance over ordered reachable pairs.
fn apl_by_bfs(g: &RelationGraph) -> f64 {
    let n = g.node_count();
    let (mut total, mut pairs) = (0u64, 0u64);
    for s in 0..n {
        let mut dist = vec![u32::MAX; n];
        dist[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &v in g.neighbors(u as u32) {
                if dist[v as usize] == u32::MAX {
                    dist[v as usize] = dist[u] + 1;
                    q.push_back(v as usize);
                }
            }
        }
        for (t, &d) in dist.iter().enumerate() {
            if t != s && d != u32::MAX {
                total += u64::from(d);
                pairs += 1;
            }
        }
    }
    total as f64 / pairs as f64
}

#[test]
fn complete_graph_metrics() {
    let m = compute_metrics(&build_complete(30).unwrap());
    assert_eq!(m.clustering_coefficient, 1.0);
    assert_eq!(m.average_path_length, 1.0);
    assert_eq!(m.degree_min, 29.0);
    assert_eq!(m.reachable_fraction, 1.0);
}

#[test]
fn ring_lattice_path_length_matches_bfs() {
    // a 20-ring with k=4: distances around the ring are ceil(d/2)
    let g = build_ring_lattice(20, 4).unwrap();
    let m = compute_metrics(&g);
    assert!((m.average_path_length - apl_by_bfs(&g)).abs() < 1e-12);
    let by_hand: f64 = (1..20).map(|d: u32| f64::from(d.min(20 - d).div_ceil(2))).sum::<f64>() / 19.0;
    assert!((m.average_path_length - by_hand).abs() < 1e-12);
}

#[test]
fn small_world_path_length_matches_bfs() {
    let g = build_small_world(300, 6, 0.2, 4).unwrap();
    assert!((compute_metrics(&g).average_path_length - apl_by_bfs(&g)).abs() < 1e-9);
}

#[test]
fn full_rewiring_destroys_clustering() {
    let lattice = compute_metrics(&build_ring_lattice(1000, 10).unwrap());
    let rewired = compute_metrics(&build_small_world(1000, 10, 1.0, 3).unwrap());
    assert!(rewired.clustering_coefficient < 0.05);
    assert!(rewired.average_path_length < lattice.average_path_length / 5.0);
}

#[test]
fn parameter_errors_name_the_parameter() {
    for (res, name) in [
        (build_small_world(100, 10, 1.5, 0), "`p`"),
        (build_small_world(100, 7, 0.1, 0), "`k`"),
        (build_small_world(100, 100, 0.1, 0), "`k`"),
        (build_small_world(2, 2, 0.1, 0), "`n`"),
    ] {
        let msg = res.unwrap_err().to_string();
        assert!(msg.contains(name), "{msg}");
    }
    let sw = build_small_world(50, 4, 0.1, 0).unwrap();
    assert!(rewire_small_world(&sw, 0.1, 0).is_err());
}

#[test]
fn edge_list_round_trip() {
    let g = build_small_world(200, 6, 0.3, 11).unwrap();
    let mut buf = Vec::new();
    write_edge_list(&g, &mut buf).unwrap();
    let back = read_edge_list(buf.as_slice()).unwrap();
    assert_eq!(back.node_count(), g.node_count());
    assert_eq!(back.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
    assert_eq!(back.kind(), TopologyKind::SmallWorld);
    let mut again = Vec::new();
    write_edge_list(&back, &mut again).unwrap();
    assert_eq!(buf, again);
}

#[test]
fn malformed_edge_lists_are_rejected() {
    assert!(read_edge_list(&b"3 2 0 0 custom\n0 5\n"[..]).is_err());
    assert!(read_edge_list(&b"3 2 0 0 custom\n1 1\n"[..]).is_err());
    assert!(read_edge_list(&b"3 2 0 0 custom\nzero one\n"[..]).is_err());
}

#[test]
fn dissemination_on_complete_graph_takes_one_round() {
    let g = build_complete(40).unwrap();
    let t = simulate_dissemination(&g, &[0], 3, TransmissionRule::AllNeighbors, 0).unwrap();
    assert_eq!(t.reach_at(0), 1.0 / 40.0);
    assert_eq!(t.reach_at(1), 1.0);
}

#[test]
fn dissemination_on_ring_grows_linearly() {
    // each round the informed arc extends k/2 nodes on both sides
    let g = build_ring_lattice(101, 4).unwrap();
    let t = simulate_dissemination(&g, &[50], 10, TransmissionRule::AllNeighbors, 0).unwrap();
    for r in 0..=10u32 {
        assert_eq!(t.reach_at(r), f64::from(1 + 4 * r) / 101.0);
    }
}

#[test]
fn dissemination_preconditions() {
    let g = build_ring_lattice(10, 2).unwrap();
    assert!(simulate_dissemination(&g, &[], 3, TransmissionRule::AllNeighbors, 0).is_err());
    assert!(simulate_dissemination(&g, &[10], 3, TransmissionRule::AllNeighbors, 0).is_err());
    assert!(simulate_dissemination(&g, &[0], 0, TransmissionRule::AllNeighbors, 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rewiring_conserves_edges_and_degree_sum(n in 10usize..200, half in 1u32..5, p in 0.0f64..=1.0, seed: u64) {
        let k = 2 * half.min((n as u32 - 1) / 2);
        let lattice = build_ring_lattice(n, k).unwrap();
        let (g, stats) = rewire_small_world(&lattice, p, seed).unwrap();
        prop_assert_eq!(g.edge_count(), n * k as usize / 2);
        prop_assert_eq!(stats.edges_visited, n * k as usize / 2);
        prop_assert!(stats.edges_rewired <= stats.edges_visited);
        prop_assert!(g.is_well_formed());
        let degree_sum: usize = (0..n as u32).map(|i| g.degree(i)).sum();
        prop_assert_eq!(degree_sum, n * k as usize);
    }

    #[test]
    fn same_seed_same_graph(n in 10usize..150, p in 0.0f64..=1.0, seed: u64) {
        let a = build_small_world(n, 4, p, seed).unwrap();
        let b = build_small_world(n, 4, p, seed).unwrap();
        prop_assert_eq!(a.edges().collect::<Vec<_>>(), b.edges().collect::<Vec<_>>());
    }

    #[test]
    fn random_graph_has_exact_edge_count(n in 10usize..150, half in 1u32..4, seed: u64) {
        let g = build_random_graph(n, 2 * half, seed).unwrap();
        prop_assert_eq!(g.edge_count(), n * half as usize);
        prop_assert!(g.is_well_formed());
    }

    #[test]
    fn reach_is_monotone_and_bounded(n in 10usize..120, p in 0.0f64..=1.0, seed: u64, fanout in prop::option::of(1usize..4)) {
        let g = build_small_world(n, 4, p, seed).unwrap();
        let rule = fanout.map_or(TransmissionRule::AllNeighbors, TransmissionRule::Fanout);
        let t = simulate_dissemination(&g, &[0], 8, rule, seed).unwrap();
        let reach: Vec<f64> = (0..=8).map(|r| t.reach_at(r)).collect();
        prop_assert!(reach.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(reach.iter().all(|&r| r > 0.0 && r <= 1.0));
    }
}
