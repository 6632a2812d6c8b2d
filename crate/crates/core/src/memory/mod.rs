//! Tiered fast memory.
//!
//! Observations are compressed into one-sentence summaries, rated for
//! importance and embedded into short-term records. Records that keep
//! meeting similar memories are promoted to long-term storage, where the
//! forgetting sweep decides what survives. Basic behaviours skip all of that
//! and reuse a cached entry from the shared [`MemoryBank`].

mod forgetting;
mod ingest;
mod retrieval;
mod snapshot;

use serde::{Deserialize, Serialize};

use crate::agent::ActionType;
use crate::backend::Embedding;
use crate::error::{Error, Result};
use crate::prompts::ImageRef;

pub use forgetting::{forgetting_score, forgetting_sweep, normalized_time, ForgettingParams, SweepMode};
pub use ingest::{compress_observation, ingest, parse_rating, rate_importance, BankEntry, IngestOutcome, MemoryBank};
pub use retrieval::{retrieve, Retrieved, RetrievalWeights};
pub use snapshot::{read_jsonl, write_jsonl};

/// Raw input to the memory pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub agent: u32,
    pub timestamp: u32,
    pub text: String,
    #[serde(default)]
    pub images: Vec<ImageRef>,
    /// The action that produced this observation, if any. Messages received
    /// and injected information have none.
    pub action: Option<ActionType>,
    pub is_basic: bool,
}

impl Observation {
    pub fn new(agent: u32, timestamp: u32, action: Option<ActionType>, text: impl Into<String>) -> Self {
        Observation {
            agent,
            timestamp,
            text: text.into(),
            images: Vec::new(),
            action,
            is_basic: action.is_some_and(ActionType::is_basic),
        }
    }

    pub fn with_images(mut self, images: Vec<ImageRef>) -> Self {
        self.images = images;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.text.trim().is_empty() && self.images.is_empty() {
            return Err(Error::Precondition("observation has neither text nor images".into()));
        }
        Ok(())
    }

    pub fn headline(&self) -> &str {
        self.text.lines().next().unwrap_or("").trim()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortTermRecord {
    pub summary: String,
    pub embedding: Embedding,
    pub importance: f64,
    pub timestamp: u32,
    pub similar_hit_count: u32,
    /// Insertion order within the owning store.
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongTermRecord {
    #[serde(flatten)]
    pub record: ShortTermRecord,
    pub promoted_at: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    ShortTerm,
    LongTerm,
}

/// Tunables of the memory pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MemoryConfig {
    #[serde(flatten)]
    pub forgetting: ForgettingParams,
    /// Similar memories needed for promotion.
    pub k: u32,
    pub similarity_threshold: f64,
    /// Maximum summary length in characters.
    pub summary_cap: usize,
    pub retrieval: RetrievalWeights,
    pub recency_decay: f64,
    /// Memories retrieved before each decision.
    pub retrieve_top_n: usize,
}

impl Default for MemoryConfig {
    fn default() -> Self {
        MemoryConfig {
            forgetting: ForgettingParams::default(),
            k: 3,
            similarity_threshold: 0.8,
            summary_cap: 200,
            retrieval: RetrievalWeights::default(),
            recency_decay: 0.99,
            retrieve_top_n: 3,
        }
    }
}

impl MemoryConfig {
    pub fn validate(&self) -> Result<()> {
        self.forgetting.validate()?;
        if self.k == 0 {
            return Err(Error::param("k", "must be positive"));
        }
        if !(self.similarity_threshold > 0.0 && self.similarity_threshold < 1.0) {
            return Err(Error::param("similarity_threshold", "must lie in (0, 1)"));
        }
        if self.summary_cap == 0 {
            return Err(Error::param("summary_cap", "must be positive"));
        }
        if !(self.recency_decay > 0.0 && self.recency_decay <= 1.0) {
            return Err(Error::param("recency_decay", "must lie in (0, 1]"));
        }
        if self.retrieve_top_n == 0 {
            return Err(Error::param("retrieve_top_n", "must be positive"));
        }
        self.retrieval.validate()
    }
}

/// One agent's short- and long-term memory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryStore {
    pub short_term: Vec<ShortTermRecord>,
    pub long_term: Vec<LongTermRecord>,
    pub k: u32,
    pub similarity_threshold: f64,
    next_seq: u64,
}

impl MemoryStore {
    pub fn new(k: u32, similarity_threshold: f64) -> Self {
        MemoryStore {
            short_term: Vec::new(),
            long_term: Vec::new(),
            k,
            similarity_threshold,
            next_seq: 0,
        }
    }

    pub fn from_config(cfg: &MemoryConfig) -> Self {
        Self::new(cfg.k, cfg.similarity_threshold)
    }

    pub fn len(&self) -> usize {
        self.short_term.len() + self.long_term.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Earliest and latest timestamps across both tiers.
    pub fn time_span(&self) -> Option<(u32, u32)> {
        let all = self
            .short_term
            .iter()
            .map(|r| r.timestamp)
            .chain(self.long_term.iter().map(|r| r.record.timestamp));
        all.fold(None, |acc, t| match acc {
            None => Some((t, t)),
            Some((lo, hi)) => Some((lo.min(t), hi.max(t))),
        })
    }

    /// The most recently inserted record of either tier.
    pub fn latest(&self) -> Option<&ShortTermRecord> {
        self.short_term
            .iter()
            .chain(self.long_term.iter().map(|r| &r.record))
            .max_by_key(|r| r.seq)
    }

    pub fn find(&self, seq: u64) -> Option<(Tier, &ShortTermRecord)> {
        if let Some(r) = self.short_term.iter().find(|r| r.seq == seq) {
            return Some((Tier::ShortTerm, r));
        }
        self.long_term
            .iter()
            .find(|r| r.record.seq == seq)
            .map(|r| (Tier::LongTerm, &r.record))
    }

    fn take_seq(&mut self) -> u64 {
        let s = self.next_seq;
        self.next_seq += 1;
        s
    }

    /// Appends a fresh record to short-term memory and updates similarity
    /// counts. Does not promote.
    pub fn push_short_term(&mut self, summary: String, embedding: Embedding, importance: f64, timestamp: u32) -> u64 {
        let seq = self.take_seq();
        let mut hits = 0;
        for other in &mut self.short_term {
            if other.embedding.cosine(&embedding) >= self.similarity_threshold {
                other.similar_hit_count += 1;
                hits += 1;
            }
        }
        let record = ShortTermRecord {
            summary,
            embedding,
            importance: importance.clamp(0.0, 1.0),
            timestamp,
            similar_hit_count: hits,
            seq,
        };
        let pos = self.short_term.partition_point(|r| r.timestamp <= timestamp);
        self.short_term.insert(pos, record);
        seq
    }

    /// Writes a record straight into long-term memory (reflection insights).
    pub fn push_long_term(&mut self, summary: String, embedding: Embedding, importance: f64, timestamp: u32) -> u64 {
        let seq = self.take_seq();
        let record = ShortTermRecord {
            summary,
            embedding,
            importance: importance.clamp(0.0, 1.0),
            timestamp,
            similar_hit_count: 0,
            seq,
        };
        self.insert_long_term(LongTermRecord {
            record,
            promoted_at: timestamp,
        });
        seq
    }

    fn insert_long_term(&mut self, rec: LongTermRecord) {
        let key = (rec.record.timestamp, rec.record.seq);
        let pos = self
            .long_term
            .partition_point(|r| (r.record.timestamp, r.record.seq) <= key);
        self.long_term.insert(pos, rec);
    }

    /// Moves the short-term record `seq` to long-term memory once it has met
    /// `k` similar records. Its hit count is frozen from then on.
    pub fn check_promotion(&mut self, seq: u64, now: u32) -> bool {
        let Some(idx) = self.short_term.iter().position(|r| r.seq == seq) else {
            return false;
        };
        if self.short_term[idx].similar_hit_count < self.k {
            return false;
        }
        let record = self.short_term.remove(idx);
        self.insert_long_term(LongTermRecord {
            record,
            promoted_at: now,
        });
        true
    }

    /// Promotion pass after inserting `new_seq`: the new record first, then
    /// existing records in insertion order. Returns promoted seqs.
    pub fn promote_after_insert(&mut self, new_seq: u64, now: u32) -> Vec<u64> {
        let mut promoted = Vec::new();
        if self.check_promotion(new_seq, now) {
            promoted.push(new_seq);
        }
        let mut candidates: Vec<u64> = self
            .short_term
            .iter()
            .filter(|r| r.similar_hit_count >= self.k)
            .map(|r| r.seq)
            .collect();
        candidates.sort_unstable();
        for seq in candidates {
            if self.check_promotion(seq, now) {
                promoted.push(seq);
            }
        }
        promoted
    }

    pub(crate) fn restore_seq(&mut self) {
        self.next_seq = self
            .short_term
            .iter()
            .map(|r| r.seq)
            .chain(self.long_term.iter().map(|r| r.record.seq))
            .max()
            .map_or(0, |m| m + 1);
    }
}
