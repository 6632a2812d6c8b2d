use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use serde::{Deserialize, Serialize};

use super::catalog::Catalog;
use crate::agent::Persona;
use crate::backend::embedding::word_tokens;
use crate::error::{Error, Result};
use crate::rng::{hash_str, mix64, purpose, rng_for};

/// Evaluation list: hidden ground truth mixed with random distractors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationList {
    pub user_id: String,
    pub items: Vec<String>,
    pub ground_truth: Vec<String>,
}

/// `truth` plus `b` seeded-uniform distinct non-truth products, shuffled.
pub fn build_recommendation_list(
    user_id: &str,
    truth: &[String],
    b: usize,
    catalog: &Catalog,
    seed: u64,
) -> Result<RecommendationList> {
    if truth.is_empty() {
        return Err(Error::param("truth", "ground truth set is empty"));
    }
    let truth_set: BTreeSet<&str> = truth.iter().map(String::as_str).collect();
    if truth_set.len() != truth.len() {
        return Err(Error::param("truth", "ground truth contains duplicates"));
    }
    let pool: Vec<&str> = catalog
        .products()
        .iter()
        .map(|p| p.product_id.as_str())
        .filter(|id| !truth_set.contains(id))
        .collect();
    if pool.len() < b {
        return Err(Error::param(
            "b",
            format!("catalog has only {} non-truth products, {b} requested", pool.len()),
        ));
    }
    let mut rng = rng_for(seed, &[purpose::EVAL_LIST]);
    let mut items: Vec<String> = truth.to_vec();
    items.extend(pool.choose_multiple(&mut rng, b).map(|s| s.to_string()));
    items.shuffle(&mut rng);
    Ok(RecommendationList {
        user_id: user_id.to_string(),
        items,
        ground_truth: truth.to_vec(),
    })
}

/// How the shopping system fills a recommendation window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecommenderConfig {
    /// Products per window.
    pub window: usize,
    /// Blend between uniform (0) and persona-preference (1) sampling.
    pub preference_blend: f64,
    /// Multiplier on sales in the `1 + popularity · sales` weight factor.
    pub popularity: f64,
}

impl Default for RecommenderConfig {
    fn default() -> Self {
        RecommenderConfig {
            window: 6,
            preference_blend: 0.5,
            popularity: 0.0,
        }
    }
}

impl RecommenderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::param("window", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.preference_blend) {
            return Err(Error::param("preference_blend", "must lie in [0, 1]"));
        }
        if !(self.popularity >= 0.0 && self.popularity.is_finite()) {
            return Err(Error::param("popularity", "must be nonnegative"));
        }
        Ok(())
    }
}

/// Sampling weight of every catalog product for `persona`.
pub fn recommendation_weights(catalog: &Catalog, persona: &Persona, sales: &[u64], cfg: &RecommenderConfig) -> Vec<f64> {
    let m = catalog.len() as f64;
    catalog
        .products()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let cat_size = catalog.in_category(&p.category).len().max(1) as f64;
            let preferred = persona.preference(&p.category) / cat_size;
            let base = (1.0 - cfg.preference_blend) / m + cfg.preference_blend * preferred;
            let pop = 1.0 + cfg.popularity * sales.get(i).copied().unwrap_or(0) as f64;
            base * pop
        })
        .collect()
}

/// A seeded weighted sample without replacement, returned as catalog
/// indices. `key` identifies the draw (agent, round, page).
pub fn recommend(
    catalog: &Catalog,
    persona: &Persona,
    sales: &[u64],
    cfg: &RecommenderConfig,
    seed: u64,
    key: &[u64],
) -> Vec<usize> {
    let weights = recommendation_weights(catalog, persona, sales, cfg);
    let mut parts = vec![purpose::RECOMMEND];
    parts.extend_from_slice(key);
    let mut rng = rng_for(seed, &parts);
    let idx: Vec<usize> = (0..catalog.len()).collect();
    let n = cfg.window.min(catalog.len());
    match idx.choose_multiple_weighted(&mut rng, n, |&i| weights[i].max(1e-12)) {
        Ok(it) => it.copied().collect(),
        Err(_) => idx.choose_multiple(&mut rng, n).copied().collect(),
    }
}

/// Token-overlap search over title and description. Ties are broken by a
/// seeded hash so results are stable but not biased toward catalog order.
pub fn search(catalog: &Catalog, query: &str, limit: usize, seed: u64) -> Vec<usize> {
    let q: BTreeSet<String> = word_tokens(query).collect();
    if q.is_empty() {
        return Vec::new();
    }
    let mut scored: Vec<(usize, u64, usize)> = catalog
        .products()
        .iter()
        .enumerate()
        .filter_map(|(i, p)| {
            let text = format!("{} {} {}", p.title, p.category, p.description);
            let toks: BTreeSet<String> = word_tokens(&text).collect();
            let hits = q.intersection(&toks).count();
            (hits > 0).then(|| (hits, mix64(seed ^ hash_str(&p.product_id) ^ purpose::SEARCH), i))
        })
        .collect();
    scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.into_iter().take(limit).map(|(_, _, i)| i).collect()
}
