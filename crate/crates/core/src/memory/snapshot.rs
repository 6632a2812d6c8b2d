use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{LongTermRecord, MemoryStore, ShortTermRecord, Tier};
use crate::backend::Embedding;
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct Line {
    tier: Tier,
    timestamp: u32,
    importance: f64,
    summary: String,
    embedding: Embedding,
    seq: u64,
    similar_hit_count: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    promoted_at: Option<u32>,
}

/// One JSON record per line, short-term tier first.
pub fn write_jsonl<W: Write>(store: &MemoryStore, mut out: W) -> Result<()> {
    let short = store.short_term.iter().map(|r| (Tier::ShortTerm, r, None));
    let long = store
        .long_term
        .iter()
        .map(|r| (Tier::LongTerm, &r.record, Some(r.promoted_at)));
    for (tier, r, promoted_at) in short.chain(long) {
        let line = Line {
            tier,
            timestamp: r.timestamp,
            importance: r.importance,
            summary: r.summary.clone(),
            embedding: r.embedding.clone(),
            seq: r.seq,
            similar_hit_count: r.similar_hit_count,
            promoted_at,
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(input: R, k: u32, similarity_threshold: f64) -> Result<MemoryStore> {
    let mut store = MemoryStore::new(k, similarity_threshold);
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let l: Line = serde_json::from_str(&line).map_err(|e| Error::Ingest {
            line: i + 1,
            message: e.to_string(),
        })?;
        let record = ShortTermRecord {
            summary: l.summary,
            embedding: l.embedding,
            importance: l.importance,
            timestamp: l.timestamp,
            similar_hit_count: l.similar_hit_count,
            seq: l.seq,
        };
        match l.tier {
            Tier::ShortTerm => store.short_term.push(record),
            Tier::LongTerm => store.long_term.push(LongTermRecord {
                record,
                promoted_at: l.promoted_at.unwrap_or(l.timestamp),
            }),
        }
    }
    store.short_term.sort_by_key(|r| (r.timestamp, r.seq));
    store.long_term.sort_by_key(|r| (r.record.timestamp, r.record.seq));
    store.restore_seq();
    Ok(store)
}
