//! Run configuration, loaded from TOML.
//!
//! ```toml
//! [society]
//! agents = 100
//! k = 10
//! p = 0.1
//! seed = 7
//!
//! [run]
//! rounds = 10
//! seed = 42
//! fast_memory = true
//!
//! [backend]
//! kind = "stub"
//!
//! [memory]
//! beta = 1.5
//! delta = 0.1
//! k = 3
//! similarity_threshold = 0.8
//! sweep_mode = "probabilistic"
//!
//! [eval]
//! a = 1
//! b = 5
//! ```
//!
//! Every section and field is optional; omitted values take defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agent::AgentConfig;
use crate::backend::{Backend, BackendKind, OracleProvider, Policy, RemoteConfig, RemoteProvider, StubProfile, StubProvider};
use crate::error::{Error, Result};
use crate::graph::{self, RelationGraph, TopologyKind};
use crate::memory::MemoryConfig;
use crate::rng::fnv1a;
use crate::sandbox::{fixtures, load_catalog, Catalog, RecommenderConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SocietyConfig {
    pub agents: usize,
    pub k: u32,
    pub p: f64,
    pub seed: u64,
    pub topology: TopologyKind,
    /// Catalog file; the bundled fixture when absent.
    pub catalog: Option<PathBuf>,
}

impl Default for SocietyConfig {
    fn default() -> Self {
        SocietyConfig {
            agents: 100,
            k: 10,
            p: 0.1,
            seed: 7,
            topology: TopologyKind::SmallWorld,
            catalog: None,
        }
    }
}

impl SocietyConfig {
    pub fn build_graph(&self) -> Result<RelationGraph> {
        build_topology(self.topology, self.agents, self.k, self.p, self.seed)
    }
}

/// Builds any supported topology from its parameters.
pub fn build_topology(kind: TopologyKind, n: usize, k: u32, p: f64, seed: u64) -> Result<RelationGraph> {
    match kind {
        TopologyKind::RingLattice => graph::build_ring_lattice(n, k),
        TopologyKind::SmallWorld => graph::build_small_world(n, k, p, seed),
        TopologyKind::Random => graph::build_random_graph(n, k, seed),
        TopologyKind::Complete => graph::build_complete(n),
        TopologyKind::Custom => Err(Error::param("kind", "custom graphs are loaded from an edge list")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub rounds: u32,
    /// Seed of every stochastic choice made during the run.
    pub seed: u64,
    pub fast_memory: bool,
    /// Extra live-stream viewers sampled beyond the host's friends.
    pub live_bonus_audience: usize,
    pub search_limit: usize,
    pub recommender: RecommenderConfig,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            rounds: 10,
            seed: 42,
            fast_memory: true,
            live_bonus_audience: 0,
            search_limit: 6,
            recommender: RecommenderConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    #[serde(flatten)]
    pub remote: RemoteConfig,
    /// Selection policy of the oracle backend.
    pub policy: Option<Policy>,
    pub stub: StubProfile,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::Stub,
            remote: RemoteConfig::default(),
            policy: None,
            stub: StubProfile::default(),
        }
    }
}

impl BackendConfig {
    pub fn build(&self) -> Result<Backend> {
        Ok(match self.kind {
            BackendKind::Stub => Backend::new(StubProvider::new(self.stub.clone())),
            BackendKind::Remote => Backend::new(RemoteProvider::new(self.remote.clone())),
            BackendKind::Oracle => {
                let policy = self
                    .policy
                    .ok_or_else(|| Error::param("backend.policy", "the oracle backend needs a policy"))?;
                policy.validate()?;
                let mut o = OracleProvider::new(policy);
                o.fallback = StubProvider::new(self.stub.clone());
                Backend::new(o)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Ground-truth items per user.
    pub a: usize,
    /// Distractors per user.
    pub b: usize,
    /// Synthetic users; 0 uses the purchase log's users.
    pub users: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            a: 1,
            b: 5,
            users: 0,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub society: SocietyConfig,
    pub run: RunSection,
    pub backend: BackendConfig,
    pub memory: MemoryConfig,
    pub agent: AgentConfig,
    pub eval: EvalConfig,
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(Error::NotFound(path.to_path_buf())),
            Err(e) => return Err(e.into()),
        };
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Re-checks every parameter-domain constraint of the owning modules.
    pub fn validate(&self) -> Result<()> {
        let s = &self.society;
        if s.agents < 3 {
            return Err(Error::param("society.agents", "need at least 3 agents"));
        }
        if !(0.0..=1.0).contains(&s.p) {
            return Err(Error::param("society.p", format!("{} is not a probability", s.p)));
        }
        match s.topology {
            TopologyKind::RingLattice | TopologyKind::SmallWorld => {
                if s.k == 0 || s.k % 2 == 1 || s.k as usize >= s.agents {
                    return Err(Error::param("society.k", "must be even, positive and below the agent count"));
                }
            }
            TopologyKind::Random => {
                if (s.agents as u64 * u64::from(s.k)) % 2 == 1 || s.k as usize >= s.agents {
                    return Err(Error::param("society.k", "N·k must be even and k below N"));
                }
            }
            TopologyKind::Complete => {}
            TopologyKind::Custom => return Err(Error::param("society.topology", "custom is not buildable from config")),
        }
        if self.run.rounds == 0 {
            return Err(Error::param("run.rounds", "must be at least 1"));
        }
        if self.run.search_limit == 0 {
            return Err(Error::param("run.search_limit", "must be positive"));
        }
        self.run.recommender.validate()?;
        self.memory.validate()?;
        self.agent.validate()?;
        if let Some(p) = &self.backend.policy {
            p.validate()?;
        }
        if self.backend.kind == BackendKind::Oracle && self.backend.policy.is_none() {
            return Err(Error::param("backend.policy", "the oracle backend needs a policy"));
        }
        if self.backend.remote.max_in_flight == 0 {
            return Err(Error::param("backend.max_in_flight", "must be positive"));
        }
        if self.eval.a == 0 {
            return Err(Error::param("eval.a", "must be positive"));
        }
        Ok(())
    }

    /// The configured catalog, or the bundled fixture when none is set.
    pub fn load_catalog(&self) -> Result<Catalog> {
        match &self.society.catalog {
            Some(path) => load_catalog(path),
            None => Ok(fixtures::catalog()),
        }
    }

    /// Stable hash of the configuration's canonical JSON form.
    pub fn hash(&self) -> u64 {
        fnv1a(serde_json::to_string(self).unwrap_or_default().as_bytes())
    }
}
