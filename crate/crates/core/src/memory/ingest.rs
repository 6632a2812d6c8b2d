use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{MemoryConfig, MemoryStore, Observation, ShortTermRecord};
use crate::agent::ActionType;
use crate::backend::{Backend, Category, Embedding};
use crate::error::{Error, Result};
use crate::prompts::{self, headline};

/// Summarises an observation (text plus image captions) in one backend call.
pub fn compress_observation(o: &Observation, backend: &Backend, cap: usize) -> Result<String> {
    o.validate()?;
    let reply = backend.chat(&prompts::compress(&o.text, &o.images, cap), Category::Memory)?;
    let summary: String = reply.text.trim().chars().take(cap).collect();
    if summary.is_empty() {
        // fall back to the observation itself rather than store nothing
        return Ok(o.headline().chars().take(cap).collect());
    }
    Ok(summary)
}

/// Maps the first number in a 1–10 rating reply to [0, 1], clamping out of
/// range values.
pub fn parse_rating(raw: &str) -> Result<f64> {
    let token = raw
        .split(|c: char| !(c.is_ascii_digit() || c == '.' || c == '-'))
        .find(|t| t.chars().any(|c| c.is_ascii_digit()))
        .ok_or_else(|| Error::RatingParse { raw: raw.to_string() })?;
    let r: f64 = token
        .trim_end_matches('.')
        .parse()
        .map_err(|_| Error::RatingParse { raw: raw.to_string() })?;
    Ok((r.clamp(1.0, 10.0) - 1.0) / 9.0)
}

pub fn rate_importance(summary: &str, backend: &Backend) -> Result<f64> {
    if summary.trim().is_empty() {
        return Err(Error::Precondition("cannot rate an empty summary".into()));
    }
    let reply = backend.chat(&prompts::rate(summary), Category::Memory)?;
    parse_rating(&reply.text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankEntry {
    pub action: ActionType,
    pub importance: f64,
    pub embedding: Embedding,
}

/// Cached (importance, embedding) per basic action, shared by all agents.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MemoryBank {
    entries: BTreeMap<ActionType, BankEntry>,
}

impl MemoryBank {
    /// Runs the slow path once per basic action on its canonical
    /// observation text.
    pub fn build(backend: &Backend, cap: usize) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for action in ActionType::BASIC {
            let o = Observation {
                agent: 0,
                timestamp: 0,
                text: canonical_text(action).to_string(),
                images: Vec::new(),
                action: Some(action),
                is_basic: false,
            };
            let summary = compress_observation(&o, backend, cap)?;
            let importance = rate_importance(&summary, backend)?;
            let embedding = backend.embed(&summary, Category::Memory)?;
            entries.insert(
                action,
                BankEntry {
                    action,
                    importance,
                    embedding,
                },
            );
        }
        Ok(MemoryBank { entries })
    }

    pub fn from_entries(entries: impl IntoIterator<Item = BankEntry>) -> Self {
        MemoryBank {
            entries: entries.into_iter().map(|e| (e.action, e)).collect(),
        }
    }

    pub fn get(&self, action: ActionType) -> Option<&BankEntry> {
        self.entries.get(&action)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn canonical_text(action: ActionType) -> &'static str {
    match action {
        ActionType::EnterShopping => headline::ENTER_SHOPPING,
        ActionType::EnterSocial => headline::ENTER_SOCIAL,
        ActionType::Page => headline::PAGE,
        _ => headline::IDLE,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestOutcome {
    /// The record as inserted (it may since have been promoted).
    pub record: ShortTermRecord,
    /// Served from the memory bank with no backend calls.
    pub fast_path: bool,
    /// A basic observation found no bank entry and took the slow path.
    pub bank_miss: bool,
    /// Seqs moved to long-term memory by this ingest.
    pub promoted: Vec<u64>,
}

/// Stores an observation. Basic observations with a bank entry reuse it;
/// everything else is compressed, rated and embedded (three calls).
pub fn ingest(
    store: &mut MemoryStore,
    o: &Observation,
    bank: Option<&MemoryBank>,
    backend: &Backend,
    cfg: &MemoryConfig,
) -> Result<IngestOutcome> {
    o.validate()?;
    let hit = match (o.is_basic, o.action, bank) {
        (true, Some(action), Some(bank)) => bank.get(action),
        _ => None,
    };
    let bank_miss = o.is_basic && bank.is_some() && hit.is_none();
    if bank_miss {
        tracing::debug!(agent = o.agent, action = ?o.action, "memory bank miss");
    }
    let (summary, importance, embedding) = match hit {
        Some(entry) => {
            let summary: String = o.headline().chars().take(cfg.summary_cap).collect();
            (summary, entry.importance, entry.embedding.clone())
        }
        None => {
            let summary = compress_observation(o, backend, cfg.summary_cap)?;
            let importance = rate_importance(&summary, backend)?;
            let embedding = backend.embed(&summary, Category::Memory)?;
            (summary, importance, embedding)
        }
    };
    let seq = store.push_short_term(summary, embedding, importance, o.timestamp);
    let record = store
        .short_term
        .iter()
        .find(|r| r.seq == seq)
        .cloned()
        .expect("record just inserted");
    let promoted = store.promote_after_insert(seq, o.timestamp);
    Ok(IngestOutcome {
        record,
        fast_path: hit.is_some(),
        bank_miss,
        promoted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rating_scale_mapping() {
        assert_eq!(parse_rating("1").unwrap(), 0.0);
        assert_eq!(parse_rating("10").unwrap(), 1.0);
        assert!((parse_rating("7").unwrap() - 6.0 / 9.0).abs() < 1e-12);
        assert_eq!(parse_rating("Rating: 12").unwrap(), 1.0);
        assert_eq!(parse_rating("0").unwrap(), 0.0);
        assert!(matches!(parse_rating("very poignant"), Err(Error::RatingParse { .. })));
    }

    #[test]
    fn fast_path_makes_no_calls() {
        let backend = Backend::stub();
        let cfg = MemoryConfig::default();
        let bank = MemoryBank::build(&backend, cfg.summary_cap).unwrap();
        assert_eq!(bank.len(), 4);
        let before = backend.meter().snapshot();
        let mut store = MemoryStore::from_config(&cfg);
        let o = Observation::new(1, 1, Some(ActionType::Idle), "Stayed idle for the round.");
        let out = ingest(&mut store, &o, Some(&bank), &backend, &cfg).unwrap();
        assert!(out.fast_path);
        assert_eq!(backend.meter().snapshot(), before);

        let o = Observation::new(1, 2, Some(ActionType::Purchase), "Purchased Retro Puzzle Game.");
        let out = ingest(&mut store, &o, Some(&bank), &backend, &cfg).unwrap();
        assert!(!out.fast_path);
        assert_eq!(backend.meter().snapshot().calls - before.calls, 3);
        assert_eq!(store.short_term.len(), 2);
    }

    #[test]
    fn bank_miss_takes_slow_path() {
        let backend = Backend::stub();
        let cfg = MemoryConfig::default();
        let mut store = MemoryStore::from_config(&cfg);
        let empty = MemoryBank::default();
        let o = Observation::new(0, 0, Some(ActionType::Page), "Paged to more recommendations.");
        let out = ingest(&mut store, &o, Some(&empty), &backend, &cfg).unwrap();
        assert!(out.bank_miss && !out.fast_path);
        assert_eq!(backend.meter().snapshot().calls, 3);
    }

    #[test]
    fn compress_mentions_caption() {
        let backend = Backend::stub();
        let o = Observation::new(0, 0, Some(ActionType::ViewDetails), "Viewed details of Runner X (P0001).")
            .with_images(vec![crate::prompts::ImageRef {
                reference: "img/P0001.jpg".into(),
                caption: "red sneakers product photo".into(),
            }]);
        let s = compress_observation(&o, &backend, 200).unwrap();
        assert!(s.contains("sneakers"), "{s}");
        let mut empty = Observation::new(0, 0, None, "");
        empty.is_basic = false;
        assert!(compress_observation(&empty, &backend, 200).is_err());
    }
}
