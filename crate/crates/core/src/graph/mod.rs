//! Relation network between agents: constructors, structural metrics and
//! information-dissemination analysis.

mod build;
mod dissemination;
mod io;
mod metrics;

use serde::{Deserialize, Serialize};

pub use build::{build_complete, build_random_graph, build_ring_lattice, build_small_world, rewire_small_world, RewireStats};
pub use dissemination::{simulate_dissemination, DisseminationRound, DisseminationTrace, TransmissionRule};
pub use io::{read_edge_list, write_edge_list};
pub use metrics::{compute_metrics, GraphMetrics};

pub type NodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    RingLattice,
    SmallWorld,
    Random,
    Complete,
    /// Built from an explicit edge list.
    Custom,
}

impl TopologyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TopologyKind::RingLattice => "ring_lattice",
            TopologyKind::SmallWorld => "small_world",
            TopologyKind::Random => "random",
            TopologyKind::Complete => "complete",
            TopologyKind::Custom => "custom",
        }
    }
}

impl std::str::FromStr for TopologyKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        Ok(match s {
            "ring_lattice" | "ring" | "regular" => TopologyKind::RingLattice,
            "small_world" => TopologyKind::SmallWorld,
            "random" => TopologyKind::Random,
            "complete" => TopologyKind::Complete,
            "custom" => TopologyKind::Custom,
            other => return Err(crate::Error::param("kind", format!("unknown topology {other:?}"))),
        })
    }
}

impl std::fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildParams {
    pub k: u32,
    pub p: f64,
    pub seed: u64,
}

/// Undirected simple graph over `0..node_count`.
///
/// Neighbour lists are kept sorted, so two graphs built from the same
/// parameters compare equal element for element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationGraph {
    adjacency: Vec<Vec<NodeId>>,
    kind: TopologyKind,
    params: BuildParams,
}

impl RelationGraph {
    pub(crate) fn from_sorted(adjacency: Vec<Vec<NodeId>>, kind: TopologyKind, params: BuildParams) -> Self {
        debug_assert!(adjacency.iter().all(|n| n.windows(2).all(|w| w[0] < w[1])));
        RelationGraph {
            adjacency,
            kind,
            params,
        }
    }

    /// Builds a graph from explicit undirected edges. Duplicate edges collapse;
    /// self-loops and out-of-range endpoints are rejected.
    pub fn from_edges(node_count: usize, edges: &[(NodeId, NodeId)]) -> crate::Result<Self> {
        Self::from_edges_with(node_count, edges, TopologyKind::Custom, BuildParams { k: 0, p: 0.0, seed: 0 })
    }

    pub(crate) fn from_edges_with(
        node_count: usize,
        edges: &[(NodeId, NodeId)],
        kind: TopologyKind,
        params: BuildParams,
    ) -> crate::Result<Self> {
        if node_count == 0 {
            return Err(crate::Error::param("n", "graph needs at least one node"));
        }
        let mut adjacency = vec![Vec::new(); node_count];
        for &(a, b) in edges {
            if a == b {
                return Err(crate::Error::Validation(format!("self-loop on node {a}")));
            }
            if a as usize >= node_count || b as usize >= node_count {
                return Err(crate::Error::Validation(format!(
                    "edge ({a}, {b}) out of range for {node_count} nodes"
                )));
            }
            adjacency[a as usize].push(b);
            adjacency[b as usize].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Ok(RelationGraph::from_sorted(adjacency, kind, params))
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn params(&self) -> BuildParams {
        self.params
    }

    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.adjacency[node as usize]
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.adjacency[node as usize].len()
    }

    pub fn is_adjacent(&self, a: NodeId, b: NodeId) -> bool {
        self.adjacency[a as usize].binary_search(&b).is_ok()
    }

    /// Undirected edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(i, list)| {
            let i = i as NodeId;
            list.iter().filter(move |&&j| j > i).map(move |&j| (i, j))
        })
    }

    /// Checks symmetry and the absence of self-loops.
    pub fn is_well_formed(&self) -> bool {
        self.adjacency.iter().enumerate().all(|(i, list)| {
            let i = i as NodeId;
            list.windows(2).all(|w| w[0] < w[1])
                && list.iter().all(|&j| j != i && self.is_adjacent(j, i))
        })
    }
}
