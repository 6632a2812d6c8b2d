use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::config::build_topology;
use crate::error::{Error, Result};
use crate::graph::{simulate_dissemination, TopologyKind, TransmissionRule};
use crate::rng::{purpose, rng_for};

/// The three topologies compared in dissemination reports.
pub const COMPARED_TOPOLOGIES: [TopologyKind; 3] = [TopologyKind::Random, TopologyKind::SmallWorld, TopologyKind::RingLattice];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyTrace {
    pub topology: TopologyKind,
    /// Mean informed fraction per round, round 0 first.
    pub mean_reach: Vec<f64>,
    /// Informed fraction per seed and round.
    pub reach_by_seed: Vec<Vec<f64>>,
}

impl TopologyTrace {
    /// Per-seed reach after `round`.
    pub fn at(&self, round: u32) -> Vec<f64> {
        self.reach_by_seed
            .iter()
            .map(|r| r[(round as usize).min(r.len() - 1)])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkReport {
    pub n: usize,
    pub k: u32,
    pub p: f64,
    pub rounds: u32,
    pub seeds: Vec<u64>,
    pub rule: TransmissionRule,
    pub traces: Vec<TopologyTrace>,
}

impl NetworkReport {
    pub fn trace(&self, kind: TopologyKind) -> Option<&TopologyTrace> {
        self.traces.iter().find(|t| t.topology == kind)
    }
}

/// Spreads one message from a single random node over each topology, once
/// per seed; the graph and the origin both depend on the seed.
pub fn dissemination_report(
    n: usize,
    k: u32,
    p: f64,
    rounds: u32,
    seeds: &[u64],
    rule: TransmissionRule,
) -> Result<NetworkReport> {
    if seeds.is_empty() {
        return Err(Error::param("seeds", "need at least one seed"));
    }
    let mut traces = Vec::with_capacity(COMPARED_TOPOLOGIES.len());
    for kind in COMPARED_TOPOLOGIES {
        let mut reach_by_seed = Vec::with_capacity(seeds.len());
        for &seed in seeds {
            let g = build_topology(kind, n, k, p, seed)?;
            let origin = rng_for(seed, &[purpose::DISSEMINATION]).random_range(0..n as u32);
            let t = simulate_dissemination(&g, &[origin], rounds, rule, seed)?;
            reach_by_seed.push(t.rounds.iter().map(|r| r.cumulative_fraction).collect::<Vec<_>>());
        }
        let mean_reach = (0..=rounds as usize)
            .map(|r| reach_by_seed.iter().map(|v| v[r]).sum::<f64>() / seeds.len() as f64)
            .collect();
        traces.push(TopologyTrace {
            topology: kind,
            mean_reach,
            reach_by_seed,
        });
    }
    Ok(NetworkReport {
        n,
        k,
        p,
        rounds,
        seeds: seeds.to_vec(),
        rule,
        traces,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchTest {
    pub mean_diff: f64,
    pub t: f64,
    pub df: f64,
    /// One-sided p-value for mean(a) > mean(b).
    pub p_value: f64,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v)
}

/// Welch's unequal-variance t-test of mean(a) > mean(b).
pub fn welch_greater(a: &[f64], b: &[f64]) -> Result<WelchTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::param("samples", "each sample needs at least two values"));
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (sa, sb) = (va / a.len() as f64, vb / b.len() as f64);
    let se2 = sa + sb;
    let diff = ma - mb;
    if se2 == 0.0 {
        // no spread at all: the ordering is certain either way
        let p_value = if diff > 0.0 { 0.0 } else { 1.0 };
        let t = if diff > 0.0 { f64::INFINITY } else if diff < 0.0 { f64::NEG_INFINITY } else { 0.0 };
        return Ok(WelchTest {
            mean_diff: diff,
            t,
            df: f64::INFINITY,
            p_value,
        });
    }
    let t = diff / se2.sqrt();
    let df = se2.powi(2) / (sa.powi(2) / (a.len() as f64 - 1.0) + sb.powi(2) / (b.len() as f64 - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Validation(format!("t distribution: {e}")))?;
    Ok(WelchTest {
        mean_diff: diff,
        t,
        df,
        p_value: 1.0 - dist.cdf(t),
    })
}
