use std::collections::{BTreeSet, HashSet};

use rand::Rng;

use super::{BuildParams, NodeId, RelationGraph, TopologyKind};
use crate::rng::{purpose, rng_for};
use crate::{Error, Result};

/// Counters collected while rewiring, used to check the `N·k/2` cost bound.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RewireStats {
    pub edges_visited: usize,
    pub edges_rewired: usize,
    /// Rewiring draws that found no eligible endpoint and kept the edge.
    pub skipped_no_candidate: usize,
}

fn check_lattice_params(n: usize, k: u32) -> Result<()> {
    if n < 3 {
        return Err(Error::param("n", format!("need at least 3 nodes, got {n}")));
    }
    if k == 0 || k % 2 != 0 {
        return Err(Error::param("k", format!("must be a positive even integer, got {k}")));
    }
    if k as usize >= n {
        return Err(Error::param("k", format!("must be smaller than n={n}, got {k}")));
    }
    Ok(())
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::param("p", format!("must lie in [0, 1], got {p}")));
    }
    Ok(())
}

/// Ring of `n` nodes, each joined to the `k/2` nearest nodes on either side.
pub fn build_ring_lattice(n: usize, k: u32) -> Result<RelationGraph> {
    check_lattice_params(n, k)?;
    let half = (k / 2) as usize;
    let adjacency = (0..n)
        .map(|i| {
            let mut list: Vec<NodeId> = (1..=half)
                .flat_map(|d| [((i + d) % n) as NodeId, ((i + n - d) % n) as NodeId])
                .collect();
            list.sort_unstable();
            list
        })
        .collect();
    Ok(RelationGraph::from_sorted(
        adjacency,
        TopologyKind::RingLattice,
        BuildParams { k, p: 0.0, seed: 0 },
    ))
}

/// Small-world graph: a ring lattice rewired with probability `p`.
pub fn build_small_world(n: usize, k: u32, p: f64, seed: u64) -> Result<RelationGraph> {
    let lattice = build_ring_lattice(n, k)?;
    rewire_small_world(&lattice, p, seed).map(|(g, _)| g)
}

/// Rewires every lattice edge once.
///
/// Edges are visited as `(i, (i + d) mod n)` for `i` in order and `d` in
/// `1..=k/2`. With probability `p` the far endpoint is replaced by a node drawn
/// uniformly from those that are neither `i` nor currently adjacent to `i`.
pub fn rewire_small_world(lattice: &RelationGraph, p: f64, seed: u64) -> Result<(RelationGraph, RewireStats)> {
    check_probability(p)?;
    if lattice.kind() != TopologyKind::RingLattice {
        return Err(Error::Precondition(format!(
            "rewiring expects a ring lattice, got {}",
            lattice.kind()
        )));
    }
    let n = lattice.node_count();
    let k = lattice.params().k;
    let half = (k / 2) as usize;
    let mut adjacency: Vec<BTreeSet<NodeId>> = (0..n)
        .map(|i| lattice.neighbors(i as NodeId).iter().copied().collect())
        .collect();
    let mut rng = rng_for(seed, &[purpose::GRAPH, n as u64, u64::from(k)]);
    let mut stats = RewireStats::default();

    for i in 0..n {
        for d in 1..=half {
            let j = ((i + d) % n) as NodeId;
            let i_id = i as NodeId;
            stats.edges_visited += 1;
            let r: f64 = rng.random();
            if r >= p {
                continue;
            }
            let degree = adjacency[i].len();
            if degree + 1 >= n {
                stats.skipped_no_candidate += 1;
                continue;
            }
            let m = pick_candidate(&mut rng, n, i_id, &adjacency[i]);
            adjacency[i].remove(&j);
            adjacency[j as usize].remove(&i_id);
            adjacency[i].insert(m);
            adjacency[m as usize].insert(i_id);
            stats.edges_rewired += 1;
        }
    }

    let adjacency = adjacency.into_iter().map(|s| s.into_iter().collect()).collect();
    let graph = RelationGraph::from_sorted(adjacency, TopologyKind::SmallWorld, BuildParams { k, p, seed });
    Ok((graph, stats))
}

/// Uniform draw from `{0..n} \ ({i} ∪ neighbours)`. Caller guarantees the set
/// is nonempty.
fn pick_candidate(rng: &mut impl Rng, n: usize, i: NodeId, neighbors: &BTreeSet<NodeId>) -> NodeId {
    let eligible = n - 1 - neighbors.len();
    if eligible * 4 >= n {
        loop {
            let m = rng.random_range(0..n) as NodeId;
            if m != i && !neighbors.contains(&m) {
                return m;
            }
        }
    }
    let mut idx = rng.random_range(0..eligible);
    for m in 0..n as NodeId {
        if m == i || neighbors.contains(&m) {
            continue;
        }
        if idx == 0 {
            return m;
        }
        idx -= 1;
    }
    unreachable!("candidate set was checked to be nonempty")
}

/// Uniform random simple graph with exactly `n·k/2` edges.
pub fn build_random_graph(n: usize, k: u32, seed: u64) -> Result<RelationGraph> {
    if n < 3 {
        return Err(Error::param("n", format!("need at least 3 nodes, got {n}")));
    }
    if (n as u64 * u64::from(k)) % 2 != 0 {
        return Err(Error::param("k", format!("n·k must be even, got n={n}, k={k}")));
    }
    let m = n * k as usize / 2;
    let max_edges = n * (n - 1) / 2;
    if m > max_edges {
        return Err(Error::param("k", format!("{m} edges do not fit in a simple graph on {n} nodes")));
    }
    let mut rng = rng_for(seed, &[purpose::GRAPH, n as u64, u64::from(k), 0x5EED]);
    // For dense targets sample the complement instead.
    let complement = m * 2 > max_edges;
    let target = if complement { max_edges - m } else { m };
    let mut chosen: HashSet<(NodeId, NodeId)> = HashSet::with_capacity(target);
    let mut order = Vec::with_capacity(target);
    while order.len() < target {
        let a = rng.random_range(0..n) as NodeId;
        let b = rng.random_range(0..n) as NodeId;
        if a == b {
            continue;
        }
        let e = (a.min(b), a.max(b));
        if chosen.insert(e) {
            order.push(e);
        }
    }
    let edges: Vec<(NodeId, NodeId)> = if complement {
        (0..n as NodeId)
            .flat_map(|a| ((a + 1)..n as NodeId).map(move |b| (a, b)))
            .filter(|e| !chosen.contains(e))
            .collect()
    } else {
        order
    };
    RelationGraph::from_edges_with(n, &edges, TopologyKind::Random, BuildParams { k, p: 0.0, seed })
}

pub fn build_complete(n: usize) -> Result<RelationGraph> {
    if n < 2 {
        return Err(Error::param("n", format!("need at least 2 nodes, got {n}")));
    }
    let adjacency = (0..n)
        .map(|i| (0..n as NodeId).filter(|&j| j as usize != i).collect())
        .collect();
    Ok(RelationGraph::from_sorted(
        adjacency,
        TopologyKind::Complete,
        BuildParams { k: (n - 1) as u32, p: 0.0, seed: 0 },
    ))
}
