use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{LongTermRecord, MemoryStore};
use crate::error::{Error, Result};
use crate::rng::{purpose, rng_for};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Forget each record with probability f.
    Probabilistic,
    /// Forget records whose f reaches the threshold.
    Threshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForgettingParams {
    pub beta: f64,
    pub delta: f64,
    pub sweep_mode: SweepMode,
    pub threshold: f64,
}

impl Default for ForgettingParams {
    fn default() -> Self {
        ForgettingParams {
            beta: 1.5,
            delta: 0.1,
            sweep_mode: SweepMode::Probabilistic,
            threshold: 0.9,
        }
    }
}

impl ForgettingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::param("beta", format!("{} is not a positive real", self.beta)));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::param("delta", format!("{} is outside (0, 1]", self.delta)));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::param("threshold", format!("{} is outside [0, 1]", self.threshold)));
        }
        Ok(())
    }
}

/// Position of `t` between the oldest and newest memory, in [0, 1]. A
/// degenerate span counts as newest.
pub fn normalized_time(t: u32, t_oldest: u32, t_newest: u32) -> f64 {
    if t_newest <= t_oldest {
        return 1.0;
    }
    (f64::from(t.clamp(t_oldest, t_newest) - t_oldest) / f64::from(t_newest - t_oldest)).clamp(0.0, 1.0)
}

/// f = 1 − ((t̂ + I) / 2) · max(I^β, δ), clamped to [0, 1].
pub fn forgetting_score(t_hat: f64, importance: f64, params: &ForgettingParams) -> f64 {
    let t_hat = t_hat.clamp(0.0, 1.0);
    let i = importance.clamp(0.0, 1.0);
    let strength = i.powf(params.beta).max(params.delta);
    (1.0 - (t_hat + i) / 2.0 * strength).clamp(0.0, 1.0)
}

/// Applies the forgetting rule to every long-term record. Recency is
/// normalised over the agent's whole memory (both tiers). Returns the
/// removed records in their original order.
pub fn forgetting_sweep(store: &mut MemoryStore, params: &ForgettingParams, seed: u64) -> Vec<LongTermRecord> {
    let Some((lo, hi)) = store.time_span() else {
        return Vec::new();
    };
    if store.long_term.is_empty() {
        return Vec::new();
    }
    let mut rng = rng_for(seed, &[purpose::SWEEP]);
    let mut removed = Vec::new();
    let mut kept = Vec::with_capacity(store.long_term.len());
    for rec in store.long_term.drain(..) {
        let f = forgetting_score(normalized_time(rec.record.timestamp, lo, hi), rec.record.importance, params);
        let forget = match params.sweep_mode {
            SweepMode::Threshold => f >= params.threshold,
            // one draw per record regardless of f keeps the stream aligned
            SweepMode::Probabilistic => rng.random::<f64>() < f,
        };
        if forget {
            removed.push(rec);
        } else {
            kept.push(rec);
        }
    }
    store.long_term = kept;
    removed
}
