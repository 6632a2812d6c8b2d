use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{NodeId, RelationGraph};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphMetrics {
    /// Mean local clustering; nodes of degree < 2 contribute 0.
    pub clustering_coefficient: f64,
    /// Mean shortest-path length over ordered pairs inside the largest
    /// connected component.
    pub average_path_length: f64,
    pub degree_min: f64,
    pub degree_mean: f64,
    pub degree_max: f64,
    /// Fraction of ordered node pairs that are connected by some path.
    pub reachable_fraction: f64,
    pub largest_component: usize,
}

pub fn compute_metrics(graph: &RelationGraph) -> GraphMetrics {
    let n = graph.node_count();
    let degrees: Vec<usize> = (0..n as NodeId).map(|i| graph.degree(i)).collect();
    let degree_min = degrees.iter().copied().min().unwrap_or(0) as f64;
    let degree_max = degrees.iter().copied().max().unwrap_or(0) as f64;
    let degree_mean = degrees.iter().sum::<usize>() as f64 / n as f64;

    let components = connected_components(graph);
    let reachable_pairs: u64 = components.iter().map(|c| (c.len() as u64) * (c.len() as u64 - 1)).sum();
    let total_pairs = n as u64 * (n as u64 - 1);
    let reachable_fraction = if total_pairs == 0 {
        0.0
    } else {
        reachable_pairs as f64 / total_pairs as f64
    };
    let largest = components.iter().max_by_key(|c| c.len()).cloned().unwrap_or_default();

    GraphMetrics {
        clustering_coefficient: clustering_coefficient(graph),
        average_path_length: average_path_length(graph, &largest),
        degree_min,
        degree_mean,
        degree_max,
        reachable_fraction,
        largest_component: largest.len(),
    }
}

pub(crate) fn local_clustering(graph: &RelationGraph, node: NodeId) -> f64 {
    let nbrs = graph.neighbors(node);
    let d = nbrs.len();
    if d < 2 {
        return 0.0;
    }
    let mut closed = 0usize;
    for (idx, &a) in nbrs.iter().enumerate() {
        for &b in &nbrs[idx + 1..] {
            if graph.is_adjacent(a, b) {
                closed += 1;
            }
        }
    }
    closed as f64 / (d * (d - 1) / 2) as f64
}

fn clustering_coefficient(graph: &RelationGraph) -> f64 {
    let n = graph.node_count();
    let sum: f64 = (0..n as NodeId)
        .into_par_iter()
        .map(|i| local_clustering(graph, i))
        .collect::<Vec<_>>()
        .iter()
        .sum();
    sum / n as f64
}

fn connected_components(graph: &RelationGraph) -> Vec<Vec<NodeId>> {
    let n = graph.node_count();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start as NodeId];
        let mut queue = VecDeque::from([start as NodeId]);
        while let Some(u) = queue.pop_front() {
            for &v in graph.neighbors(u) {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    comp.push(v);
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Breadth-first distances from `source`; `u32::MAX` marks unreachable nodes.
pub(crate) fn bfs_distances(graph: &RelationGraph, source: NodeId) -> Vec<u32> {
    let mut dist = vec![u32::MAX; graph.node_count()];
    dist[source as usize] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u as usize];
        for &v in graph.neighbors(u) {
            if dist[v as usize] == u32::MAX {
                dist[v as usize] = du + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

fn average_path_length(graph: &RelationGraph, component: &[NodeId]) -> f64 {
    let c = component.len() as u64;
    if c < 2 {
        return 0.0;
    }
    // Integer sums keep the parallel reduction order-independent.
    let total: u64 = component
        .par_iter()
        .map(|&s| {
            bfs_distances(graph, s)
                .into_iter()
                .filter(|&d| d != u32::MAX)
                .map(u64::from)
                .sum::<u64>()
        })
        .sum();
    total as f64 / (c * (c - 1)) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_complete, build_ring_lattice};

    /// Independent oracle: dense adjacency matrix, count closed triples by
    /// enumerating every ordered (a, b) neighbour pair of every node.
    fn brute_force_clustering(graph: &RelationGraph) -> f64 {
        let n = graph.node_count();
        let mut m = vec![vec![false; n]; n];
        for (a, b) in graph.edges() {
            m[a as usize][b as usize] = true;
            m[b as usize][a as usize] = true;
        }
        let mut sum = 0.0;
        for v in 0..n {
            let mut triples = 0u32;
            let mut closed = 0u32;
            for a in 0..n {
                for b in 0..n {
                    if a != b && m[v][a] && m[v][b] {
                        triples += 1;
                        if m[a][b] {
                            closed += 1;
                        }
                    }
                }
            }
            if triples > 0 {
                sum += f64::from(closed) / f64::from(triples);
            }
        }
        sum / n as f64
    }

    #[test]
    fn complete_graph_metrics() {
        let m = compute_metrics(&build_complete(5).unwrap());
        assert_eq!(m.clustering_coefficient, 1.0);
        assert_eq!(m.average_path_length, 1.0);
        assert_eq!(m.reachable_fraction, 1.0);
    }

    #[test]
    fn path_graph_metrics() {
        // 0-1-2: distances 1,1,2 each counted in both directions over 6 ordered pairs.
        let g = RelationGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let m = compute_metrics(&g);
        assert_eq!(m.clustering_coefficient, 0.0);
        assert!((m.average_path_length - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn lattice_clustering_matches_oracle() {
        let g = build_ring_lattice(10, 4).unwrap();
        let oracle = brute_force_clustering(&g);
        assert!((oracle - 0.5).abs() < 1e-12, "oracle {oracle}");
        assert!((compute_metrics(&g).clustering_coefficient - oracle).abs() < 1e-12);

        let g = build_ring_lattice(60, 10).unwrap();
        let oracle = brute_force_clustering(&g);
        assert!((oracle - 2.0 / 3.0).abs() < 1e-12);
        assert!((compute_metrics(&g).clustering_coefficient - oracle).abs() < 1e-12);
    }

    #[test]
    fn disconnected_graph_uses_largest_component() {
        // Triangle plus an isolated pair and an isolated node.
        let g = RelationGraph::from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 4)]).unwrap();
        let m = compute_metrics(&g);
        assert_eq!(m.largest_component, 3);
        assert_eq!(m.average_path_length, 1.0);
        assert!((m.reachable_fraction - 8.0 / 30.0).abs() < 1e-12);
        assert_eq!(m.degree_min, 0.0);
        assert_eq!(m.degree_max, 2.0);
    }
}
