use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::agent::{self, ActionType, AgentConfig, AgentState, Environment, Location, Target, VisibleProduct};
use crate::backend::{Backend, OracleProvider, Policy, StubProvider};
use crate::error::{Error, Result};
use crate::memory::MemoryStore;
use crate::rng::{derive_seed, purpose};
use crate::sandbox::{recommend, Catalog, RecommenderConfig};

/// Purchase shares of the most bought products at one agent scale,
/// averaged over runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleConcentration {
    pub agents: usize,
    pub runs: usize,
    pub purchases: u64,
    /// Mean share of the i-th most bought product, i < n.
    pub top_shares: Vec<f64>,
    /// Top-1 share of each run, in input order.
    pub top1_by_run: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub n: usize,
    pub scales: Vec<ScaleConcentration>,
}

impl ConcentrationReport {
    pub fn top1(&self) -> Vec<(usize, f64)> {
        self.scales
            .iter()
            .map(|s| (s.agents, s.top_shares.first().copied().unwrap_or(0.0)))
            .collect()
    }
}

/// Purchase counts per product, most bought first (ties by product id).
pub fn ranked_counts(purchases: &[String]) -> Vec<(String, u64)> {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for p in purchases {
        *counts.entry(p).or_default() += 1;
    }
    let mut v: Vec<(String, u64)> = counts.into_iter().map(|(k, c)| (k.to_string(), c)).collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v
}

/// Shares of every product, most bought first. Sums to 1 up to rounding.
pub fn shares(purchases: &[String]) -> Vec<(String, f64)> {
    let total = purchases.len() as f64;
    ranked_counts(purchases)
        .into_iter()
        .map(|(p, c)| (p, c as f64 / total))
        .collect()
}

/// Groups ledgers (agent scale, purchased product ids) by scale and reports
/// the mean top-`n` shares per scale. Empty ledgers contribute zero shares.
pub fn concentration_report(ledgers: &[(usize, Vec<String>)], n: usize) -> Result<ConcentrationReport> {
    if ledgers.is_empty() {
        return Err(Error::Validation("no ledgers to report".into()));
    }
    let mut by_scale: BTreeMap<usize, Vec<&Vec<String>>> = BTreeMap::new();
    for (scale, l) in ledgers {
        by_scale.entry(*scale).or_default().push(l);
    }
    let scales = by_scale
        .into_iter()
        .map(|(agents, runs)| {
            let mut top = vec![0.0; n];
            let mut top1_by_run = Vec::with_capacity(runs.len());
            for l in &runs {
                let s = shares(l);
                for (i, slot) in top.iter_mut().enumerate() {
                    *slot += s.get(i).map_or(0.0, |x| x.1);
                }
                top1_by_run.push(s.first().map_or(0.0, |x| x.1));
            }
            for slot in &mut top {
                *slot /= runs.len() as f64;
            }
            ScaleConcentration {
                agents,
                runs: runs.len(),
                purchases: runs.iter().map(|l| l.len() as u64).sum(),
                top_shares: top,
                top1_by_run,
            }
        })
        .collect();
    Ok(ConcentrationReport { n, scales })
}

/// A shopping market where every agent buys one product per round from a
/// popularity-weighted recommendation window, choosing through an imitate
/// policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HerdConfig {
    pub rounds: u32,
    pub alpha: f64,
    pub recommender: RecommenderConfig,
    /// Products kept from the catalog, spread over categories.
    pub catalog_size: usize,
}

impl Default for HerdConfig {
    fn default() -> Self {
        HerdConfig {
            rounds: 3,
            alpha: 0.6,
            recommender: RecommenderConfig {
                window: 6,
                preference_blend: 0.5,
                popularity: 0.5,
            },
            catalog_size: 50,
        }
    }
}

/// Runs the market for `agents` agents and returns every purchase in order.
pub fn herd_ledger(catalog: &Catalog, agents: usize, cfg: &HerdConfig, seed: u64) -> Result<Vec<String>> {
    cfg.recommender.validate()?;
    if agents == 0 {
        return Err(Error::param("agents", "must be positive"));
    }
    let policy = Policy::Imitate { alpha: cfg.alpha, seed };
    policy.validate()?;
    let catalog = catalog.balanced_subset(cfg.catalog_size);
    let categories = catalog.categories();
    let mut oracle = OracleProvider::new(policy);
    oracle.fallback = StubProvider::default();
    let backend = Backend::new(oracle);
    let ages = AgentConfig::default().ages;
    let states = (0..agents as u64)
        .map(|i| {
            let persona = agent::generate_persona(derive_seed(seed, &[purpose::PERSONA, i]), &categories, &ages, &backend)?;
            Ok(AgentState::new(i as u32, persona, MemoryStore::new(1, 0.8), false))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut sales = vec![0u64; catalog.len()];
    let mut ledger = Vec::with_capacity(agents * cfg.rounds as usize);
    for round in 1..=cfg.rounds {
        for a in &states {
            let key = [u64::from(a.id), u64::from(round)];
            let window = recommend(&catalog, &a.persona, &sales, &cfg.recommender, seed, &key);
            let products = window
                .iter()
                .map(|&j| {
                    let p = &catalog.products()[j];
                    VisibleProduct {
                        product_id: p.product_id.clone(),
                        title: p.title.clone(),
                        category: p.category.clone(),
                        price: p.price,
                        sales: sales[j],
                        details_viewed: true,
                        image: None,
                    }
                })
                .collect();
            let env = Environment {
                location: Location::Shopping,
                legal_actions: vec![ActionType::Purchase],
                products,
                select_count: 1,
                decision_key: derive_seed(seed, &key),
                ..Default::default()
            };
            let out = agent::decide_stage2(a, "", &env, &backend)?;
            if let (ActionType::Purchase, Some(Target::Products(ids))) = (out.decision.action, &out.decision.target) {
                for id in ids {
                    let j = catalog.index_of(id).expect("window drawn from catalog");
                    sales[j] += 1;
                    ledger.push(id.clone());
                }
            }
        }
    }
    Ok(ledger)
}
