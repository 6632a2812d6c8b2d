use serde::{Deserialize, Serialize};

use super::persona::{AgeDistribution, Persona};
use crate::backend::Backend;
use crate::error::{Error, Result};
use crate::memory::{self, IngestOutcome, MemoryBank, MemoryConfig, MemoryStore, Observation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    #[default]
    Outside,
    Shopping,
    Social,
}

impl Location {
    pub fn as_str(self) -> &'static str {
        match self {
            Location::Outside => "outside",
            Location::Shopping => "shopping system",
            Location::Social => "social medium",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub ages: AgeDistribution,
    /// Importance accumulated since the last reflection that triggers one.
    pub reflection_threshold: f64,
    /// Memories retrieved for answering reflection questions.
    pub reflection_top_n: usize,
    /// Re-plan every this many rounds; 0 plans only in the first round.
    pub plan_every: u32,
    pub plan_horizon: u32,
    pub superstar_fraction: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            ages: AgeDistribution::default(),
            reflection_threshold: 3.0,
            reflection_top_n: 5,
            plan_every: 0,
            plan_horizon: 5,
            superstar_fraction: 0.01,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        self.ages.validate()?;
        if !(self.reflection_threshold > 0.0 && self.reflection_threshold.is_finite()) {
            return Err(Error::param("reflection_threshold", "must be positive"));
        }
        if self.reflection_top_n == 0 {
            return Err(Error::param("reflection_top_n", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.superstar_fraction) {
            return Err(Error::param("superstar_fraction", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub goals: Vec<String>,
    pub created_at: u32,
    pub horizon: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reflection {
    pub salient_questions: Vec<String>,
    pub insights: Vec<String>,
    pub created_at: u32,
}

/// Everything one agent owns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: u32,
    pub persona: Persona,
    pub memory: MemoryStore,
    pub superstar: bool,
    pub location: Location,
    pub last_observation: String,
    pub importance_since_reflection: f64,
    pub plan: Option<Plan>,
}

impl AgentState {
    pub fn new(id: u32, persona: Persona, memory: MemoryStore, superstar: bool) -> Self {
        AgentState {
            id,
            persona,
            memory,
            superstar,
            location: Location::Outside,
            last_observation: String::new(),
            importance_since_reflection: 0.0,
            plan: None,
        }
    }

    /// Ingests an observation into memory and makes it the latest one.
    pub fn observe(
        &mut self,
        o: &Observation,
        bank: Option<&MemoryBank>,
        backend: &Backend,
        cfg: &MemoryConfig,
    ) -> Result<IngestOutcome> {
        let out = memory::ingest(&mut self.memory, o, bank, backend, cfg)?;
        self.importance_since_reflection += out.record.importance;
        self.last_observation = o.text.lines().next().unwrap_or("").to_string();
        Ok(out)
    }

    /// Top memories as prompt lines, queried with the latest record's
    /// embedding so no embedding call is spent.
    pub fn memory_lines(&self, top_n: usize, now: u32, cfg: &MemoryConfig) -> Vec<String> {
        let Some(latest) = self.memory.latest() else {
            return Vec::new();
        };
        let query = latest.embedding.clone();
        memory::retrieve(&self.memory, &query, top_n.max(1), now, &cfg.retrieval, cfg.recency_decay)
            .map(|v| {
                v.iter()
                    .map(|r| format!("[round {}] {}", r.record.timestamp, r.record.summary))
                    .collect()
            })
            .unwrap_or_default()
    }
}
