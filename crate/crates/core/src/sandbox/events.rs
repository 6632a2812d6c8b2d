use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    RunStart,
    Persona,
    Plan,
    Reflection,
    Decision,
    Violation,
    Action,
    Purchase,
    Delivery,
    Injection,
    Ingest,
    BankMiss,
    Promotion,
    Forgetting,
    BackendCalls,
    RoundEnd,
    Selection,
}

/// One log line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub round: u32,
    pub agent: Option<u32>,
    pub kind: EventKind,
    pub payload: Value,
}

/// Append-only event log.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EventLog {
    events: Vec<Event>,
}

impl EventLog {
    pub fn push(&mut self, round: u32, agent: Option<u32>, kind: EventKind, payload: Value) {
        let seq = self.events.len() as u64;
        self.events.push(Event {
            seq,
            round,
            agent,
            kind,
            payload,
        });
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn of_kind(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.of_kind(kind).count()
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        buf
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut events = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let e: Event = serde_json::from_str(&line).map_err(|e| Error::Ingest {
                line: i + 1,
                message: e.to_string(),
            })?;
            if e.seq != events.len() as u64 {
                return Err(Error::Ingest {
                    line: i + 1,
                    message: format!("event seq {} out of order", e.seq),
                });
            }
            events.push(e);
        }
        Ok(EventLog { events })
    }
}
