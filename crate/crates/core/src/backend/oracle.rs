//! Scripted selection policies for evaluation harnesses.
//!
//! The oracle answers selection decisions directly and delegates every other
//! chat or embedding call to a [`StubProvider`], so a simulation driven by an
//! oracle still has personas, memories and social traffic.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::stub::StubProvider;
use super::{BackendError, BackendKind, ChatReply, ChatRequest, Provider, SelectionContext, TokenUsage};
use crate::rng::{purpose, rng_for};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum Policy {
    /// Always selects the hidden ground truth.
    GroundTruth,
    UniformRandom { seed: u64 },
    /// With probability `alpha` per pick, copy the best-selling remaining
    /// candidate; otherwise pick uniformly.
    Imitate { alpha: f64, seed: u64 },
}

impl Policy {
    pub fn validate(&self) -> Result<(), BackendError> {
        match self {
            Policy::Imitate { alpha, .. } if !(0.0..=1.0).contains(alpha) => {
                Err(BackendError::Oracle(format!("imitate alpha {alpha} outside [0, 1]")))
            }
            _ => Ok(()),
        }
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Policy::GroundTruth => write!(f, "ground_truth"),
            Policy::UniformRandom { seed } => write!(f, "uniform_random(seed={seed})"),
            Policy::Imitate { alpha, seed } => write!(f, "imitate(alpha={alpha}, seed={seed})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleProvider {
    pub policy: Policy,
    pub fallback: StubProvider,
}

impl OracleProvider {
    pub fn new(policy: Policy) -> Self {
        OracleProvider {
            policy,
            fallback: StubProvider::default(),
        }
    }

    pub fn choose(&self, ctx: &SelectionContext) -> Result<Vec<String>, BackendError> {
        self.policy.validate()?;
        if ctx.select_count > ctx.candidates.len() {
            return Err(BackendError::Oracle(format!(
                "asked to select {} of {} candidates",
                ctx.select_count,
                ctx.candidates.len()
            )));
        }
        let (alpha, seed) = match self.policy {
            Policy::GroundTruth => return ground_truth(ctx),
            // Uniform is imitate with alpha 0 on the same draw sequence.
            Policy::UniformRandom { seed } => (0.0, seed),
            Policy::Imitate { alpha, seed } => (alpha, seed),
        };
        let mut rng = rng_for(seed, &[purpose::ORACLE, ctx.key]);
        let mut remaining: Vec<usize> = (0..ctx.candidates.len()).collect();
        let mut picked = Vec::with_capacity(ctx.select_count);
        for _ in 0..ctx.select_count {
            let coin: f64 = rng.random();
            let slot = if coin < alpha {
                // best seller, earliest listed on ties
                let mut best = 0;
                for (s, &i) in remaining.iter().enumerate() {
                    if ctx.candidates[i].sales > ctx.candidates[remaining[best]].sales {
                        best = s;
                    }
                }
                best
            } else {
                rng.random_range(0..remaining.len())
            };
            picked.push(ctx.candidates[remaining.remove(slot)].product_id.clone());
        }
        Ok(picked)
    }
}

fn ground_truth(ctx: &SelectionContext) -> Result<Vec<String>, BackendError> {
    let truth = ctx
        .ground_truth
        .as_ref()
        .ok_or_else(|| BackendError::Oracle("ground truth not supplied".into()))?;
    for t in truth {
        if !ctx.candidates.iter().any(|c| &c.product_id == t) {
            return Err(BackendError::Oracle(format!("ground truth {t} not among candidates")));
        }
    }
    Ok(truth.clone())
}

impl Provider for OracleProvider {
    fn kind(&self) -> BackendKind {
        BackendKind::Oracle
    }

    fn complete(&self, req: &ChatRequest) -> Result<ChatReply, BackendError> {
        self.fallback.complete(req)
    }

    fn embed(&self, text: &str) -> Result<(Vec<f32>, TokenUsage), BackendError> {
        self.fallback.embed(text)
    }

    fn select(&self, ctx: &SelectionContext) -> Option<Result<Vec<String>, BackendError>> {
        Some(self.choose(ctx))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::Candidate;

    fn ctx(key: u64, sales: &[u64], select: usize, truth: Option<&[&str]>) -> SelectionContext {
        SelectionContext {
            key,
            candidates: sales
                .iter()
                .enumerate()
                .map(|(i, &s)| Candidate {
                    product_id: format!("P{i}"),
                    sales: s,
                })
                .collect(),
            select_count: select,
            ground_truth: truth.map(|t| t.iter().map(|s| s.to_string()).collect()),
        }
    }

    #[test]
    fn ground_truth_returns_truth_or_errors() {
        let o = OracleProvider::new(Policy::GroundTruth);
        let c = ctx(1, &[0; 6], 2, Some(&["P3", "P1"]));
        assert_eq!(o.choose(&c).unwrap(), vec!["P3", "P1"]);
        assert!(o.choose(&ctx(1, &[0; 6], 1, Some(&["P9"]))).is_err());
        assert!(o.choose(&ctx(1, &[0; 6], 1, None)).is_err());
    }

    #[test]
    fn imitate_zero_equals_uniform() {
        let u = OracleProvider::new(Policy::UniformRandom { seed: 9 });
        let i = OracleProvider::new(Policy::Imitate { alpha: 0.0, seed: 9 });
        for key in 0..200 {
            let c = ctx(key, &[5, 0, 9, 1, 3, 2], 3, None);
            assert_eq!(u.choose(&c).unwrap(), i.choose(&c).unwrap());
        }
    }

    #[test]
    fn imitate_one_copies_best_sellers() {
        let o = OracleProvider::new(Policy::Imitate { alpha: 1.0, seed: 3 });
        let c = ctx(7, &[5, 0, 9, 1, 9, 2], 3, None);
        assert_eq!(o.choose(&c).unwrap(), vec!["P2", "P4", "P0"]);
    }

    #[test]
    fn uniform_hit_rate_matches_expectation() {
        let o = OracleProvider::new(Policy::UniformRandom { seed: 11 });
        let trials = 6000;
        let hits = (0..trials)
            .filter(|&k| o.choose(&ctx(k, &[0; 6], 1, None)).unwrap()[0] == "P0")
            .count();
        let rate = hits as f64 / trials as f64;
        assert!((rate - 1.0 / 6.0).abs() < 0.02, "{rate}");
    }

    #[test]
    fn selections_are_distinct_and_deterministic() {
        let o = OracleProvider::new(Policy::Imitate { alpha: 0.5, seed: 1 });
        let c = ctx(42, &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10], 5, None);
        let a = o.choose(&c).unwrap();
        assert_eq!(a, o.choose(&c).unwrap());
        let set: std::collections::BTreeSet<_> = a.iter().collect();
        assert_eq!(set.len(), 5);
        assert!(o.choose(&ctx(1, &[0; 3], 4, None)).is_err());
    }
}
