use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub input_tokens: u64,
    pub output_tokens: u64,
}

impl TokenUsage {
    pub fn new(input_tokens: u64, output_tokens: u64) -> Self {
        TokenUsage {
            input_tokens,
            output_tokens,
        }
    }

    pub fn total(&self) -> u64 {
        self.input_tokens + self.output_tokens
    }
}

impl std::ops::Add for TokenUsage {
    type Output = TokenUsage;

    fn add(self, rhs: TokenUsage) -> TokenUsage {
        TokenUsage::new(self.input_tokens + rhs.input_tokens, self.output_tokens + rhs.output_tokens)
    }
}

impl std::ops::AddAssign for TokenUsage {
    fn add_assign(&mut self, rhs: TokenUsage) {
        *self = *self + rhs;
    }
}

/// Pipeline stage a call is billed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Memory,
    Prompting,
    Planning,
    Reflection,
    Social,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::Memory,
        Category::Prompting,
        Category::Planning,
        Category::Reflection,
        Category::Social,
    ];

    fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Memory => "memory",
            Category::Prompting => "prompting",
            Category::Planning => "planning",
            Category::Reflection => "reflection",
            Category::Social => "social",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CallKind {
    Chat,
    Embed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    pub category: Category,
    pub kind: CallKind,
    pub usage: TokenUsage,
}

#[derive(Default)]
struct Slot {
    input: AtomicU64,
    output: AtomicU64,
    calls: AtomicU64,
}

/// Lock-free token accumulator with an optional call journal.
///
/// The journal keeps individual [`CallRecord`]s until drained; the simulation
/// drains it after every agent step so the event log carries one line per
/// backend call.
#[derive(Default)]
pub struct TokenMeter {
    slots: [Slot; 5],
    journal: Mutex<Vec<CallRecord>>,
}

impl std::fmt::Debug for TokenMeter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_tuple("TokenMeter").field(&self.snapshot()).finish()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryTotals {
    pub usage: TokenUsage,
    pub calls: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeterSnapshot {
    pub memory: CategoryTotals,
    pub prompting: CategoryTotals,
    pub planning: CategoryTotals,
    pub reflection: CategoryTotals,
    pub social: CategoryTotals,
    pub total: TokenUsage,
    pub calls: u64,
}

impl MeterSnapshot {
    pub fn category(&self, c: Category) -> CategoryTotals {
        match c {
            Category::Memory => self.memory,
            Category::Prompting => self.prompting,
            Category::Planning => self.planning,
            Category::Reflection => self.reflection,
            Category::Social => self.social,
        }
    }

    fn category_mut(&mut self, c: Category) -> &mut CategoryTotals {
        match c {
            Category::Memory => &mut self.memory,
            Category::Prompting => &mut self.prompting,
            Category::Planning => &mut self.planning,
            Category::Reflection => &mut self.reflection,
            Category::Social => &mut self.social,
        }
    }

    /// Tallies a list of call records into a snapshot.
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a CallRecord>) -> Self {
        let mut snap = MeterSnapshot::default();
        for r in records {
            let slot = snap.category_mut(r.category);
            slot.usage += r.usage;
            slot.calls += 1;
            snap.total += r.usage;
            snap.calls += 1;
        }
        snap
    }
}

impl TokenMeter {
    pub fn record(&self, category: Category, kind: CallKind, usage: TokenUsage) {
        let slot = &self.slots[category.index()];
        slot.input.fetch_add(usage.input_tokens, Ordering::Relaxed);
        slot.output.fetch_add(usage.output_tokens, Ordering::Relaxed);
        slot.calls.fetch_add(1, Ordering::Relaxed);
        self.journal
            .lock()
            .expect("meter journal poisoned")
            .push(CallRecord { category, kind, usage });
    }

    pub fn snapshot(&self) -> MeterSnapshot {
        let mut snap = MeterSnapshot::default();
        for c in Category::ALL {
            let slot = &self.slots[c.index()];
            let totals = CategoryTotals {
                usage: TokenUsage::new(slot.input.load(Ordering::Relaxed), slot.output.load(Ordering::Relaxed)),
                calls: slot.calls.load(Ordering::Relaxed),
            };
            *snap.category_mut(c) = totals;
            snap.total += totals.usage;
            snap.calls += totals.calls;
        }
        snap
    }

    /// Takes the journal accumulated since the last drain.
    pub fn drain_journal(&self) -> Vec<CallRecord> {
        std::mem::take(&mut *self.journal.lock().expect("meter journal poisoned"))
    }

    /// Overwrites the counters, e.g. when resuming from a snapshot.
    pub fn restore(&self, snap: &MeterSnapshot) {
        for c in Category::ALL {
            let t = snap.category(c);
            let slot = &self.slots[c.index()];
            slot.input.store(t.usage.input_tokens, Ordering::Relaxed);
            slot.output.store(t.usage.output_tokens, Ordering::Relaxed);
            slot.calls.store(t.calls, Ordering::Relaxed);
        }
        self.journal.lock().expect("meter journal poisoned").clear();
    }
}
