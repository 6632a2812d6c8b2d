use serde::{Deserialize, Serialize};

use super::{MemoryStore, ShortTermRecord, Tier};
use crate::backend::Embedding;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalWeights {
    pub relevance: f64,
    pub importance: f64,
    pub recency: f64,
}

impl Default for RetrievalWeights {
    fn default() -> Self {
        RetrievalWeights {
            relevance: 1.0,
            importance: 1.0,
            recency: 1.0,
        }
    }
}

impl RetrievalWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [
            ("retrieval.relevance", self.relevance),
            ("retrieval.importance", self.importance),
            ("retrieval.recency", self.recency),
        ] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::param(name, format!("{w} is not a nonnegative weight")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Retrieved<'a> {
    pub record: &'a ShortTermRecord,
    pub tier: Tier,
    pub score: f64,
}

fn min_max(values: &mut [f64]) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    for v in values {
        *v = if span > 0.0 { (*v - lo) / span } else { 0.0 };
    }
}

/// Ranks records of both tiers by weighted, min-max normalised relevance,
/// importance and recency (`decay^(now − t)`). Ties go to the newer record,
/// then to the earlier inserted one.
pub fn retrieve<'a>(
    store: &'a MemoryStore,
    query: &Embedding,
    top_n: usize,
    now: u32,
    weights: &RetrievalWeights,
    decay: f64,
) -> Result<Vec<Retrieved<'a>>> {
    if top_n == 0 {
        return Err(Error::param("top_n", "must be at least 1"));
    }
    let records: Vec<(&ShortTermRecord, Tier)> = store
        .short_term
        .iter()
        .map(|r| (r, Tier::ShortTerm))
        .chain(store.long_term.iter().map(|r| (&r.record, Tier::LongTerm)))
        .collect();
    let mut rel: Vec<f64> = records.iter().map(|(r, _)| query.cosine(&r.embedding)).collect();
    let mut imp: Vec<f64> = records.iter().map(|(r, _)| r.importance).collect();
    let mut rec: Vec<f64> = records
        .iter()
        .map(|(r, _)| decay.powf(f64::from(now.saturating_sub(r.timestamp))))
        .collect();
    min_max(&mut rel);
    min_max(&mut imp);
    min_max(&mut rec);
    let mut out: Vec<Retrieved<'a>> = records
        .into_iter()
        .enumerate()
        .map(|(i, (record, tier))| Retrieved {
            record,
            tier,
            score: weights.relevance * rel[i] + weights.importance * imp[i] + weights.recency * rec[i],
        })
        .collect();
    out.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(b.record.timestamp.cmp(&a.record.timestamp))
            .then(a.record.seq.cmp(&b.record.seq))
    });
    out.truncate(top_n);
    Ok(out)
}
