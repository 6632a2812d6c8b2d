use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

use super::{NodeId, RelationGraph};
use crate::rng::{purpose, rng_for};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "fanout")]
pub enum TransmissionRule {
    AllNeighbors,
    /// Each informed node tells `f` neighbours chosen uniformly per round.
    Fanout(usize),
}

impl Default for TransmissionRule {
    fn default() -> Self {
        TransmissionRule::AllNeighbors
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisseminationRound {
    pub round: u32,
    pub newly_informed: usize,
    pub cumulative_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisseminationTrace {
    /// Round 0 holds the seed nodes.
    pub rounds: Vec<DisseminationRound>,
    pub seed_nodes: Vec<NodeId>,
    pub rule: TransmissionRule,
}

impl DisseminationTrace {
    /// Cumulative informed fraction after `round` (clamped to the last round).
    pub fn reach_at(&self, round: u32) -> f64 {
        self.rounds
            .iter()
            .take_while(|r| r.round <= round)
            .last()
            .map_or(0.0, |r| r.cumulative_fraction)
    }
}

pub fn simulate_dissemination(
    graph: &RelationGraph,
    seed_nodes: &[NodeId],
    rounds: u32,
    rule: TransmissionRule,
    seed: u64,
) -> Result<DisseminationTrace> {
    if seed_nodes.is_empty() {
        return Err(Error::Precondition("dissemination needs at least one seed node".into()));
    }
    if rounds == 0 {
        return Err(Error::param("rounds", "must be at least 1"));
    }
    let n = graph.node_count();
    if let Some(bad) = seed_nodes.iter().find(|&&s| s as usize >= n) {
        return Err(Error::param("seed_nodes", format!("node {bad} out of range")));
    }
    let mut informed = vec![false; n];
    let mut informed_list: Vec<NodeId> = Vec::new();
    for &s in seed_nodes {
        if !informed[s as usize] {
            informed[s as usize] = true;
            informed_list.push(s);
        }
    }
    let mut seeds = informed_list.clone();
    seeds.sort_unstable();
    let mut trace = DisseminationTrace {
        rounds: vec![DisseminationRound {
            round: 0,
            newly_informed: informed_list.len(),
            cumulative_fraction: informed_list.len() as f64 / n as f64,
        }],
        seed_nodes: seeds,
        rule,
    };

    for round in 1..=rounds {
        let mut fresh: Vec<NodeId> = Vec::new();
        match rule {
            TransmissionRule::AllNeighbors => {
                // Older transmitters have already told every neighbour, so only
                // the frontier can reach anyone new.
                let start = informed_list.len() - trace.rounds.last().map_or(0, |r| r.newly_informed);
                for &u in &informed_list[start..] {
                    for &v in graph.neighbors(u) {
                        if !informed[v as usize] {
                            informed[v as usize] = true;
                            fresh.push(v);
                        }
                    }
                }
            }
            TransmissionRule::Fanout(f) => {
                let mut rng = rng_for(seed, &[purpose::DISSEMINATION, u64::from(round)]);
                let mut transmitters = informed_list.clone();
                transmitters.sort_unstable();
                for u in transmitters {
                    let nbrs = graph.neighbors(u);
                    for &v in nbrs.choose_multiple(&mut rng, f.min(nbrs.len())) {
                        if !informed[v as usize] {
                            informed[v as usize] = true;
                            fresh.push(v);
                        }
                    }
                }
            }
        }
        informed_list.extend_from_slice(&fresh);
        trace.rounds.push(DisseminationRound {
            round,
            newly_informed: fresh.len(),
            cumulative_fraction: informed_list.len() as f64 / n as f64,
        });
    }
    Ok(trace)
}
