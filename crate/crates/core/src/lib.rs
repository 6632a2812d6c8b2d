//! Deterministic simulation engine for large multimodal agent societies in an
//! e-commerce sandbox.
//!
//! The crate is organised around the pieces a run needs:
//!
//! * [`graph`] builds and analyses the relation network between agents.
//! * [`memory`] holds each agent's tiered memory and the shared memory bank.
//! * [`backend`] abstracts chat/embedding providers and meters token usage.
//! * [`agent`] implements personas, planning, reflection and the two-stage
//!   decision pipeline.
//! * [`sandbox`] is the world: catalog, shopping system, social medium and the
//!   round-based simulation loop.
//! * [`eval`] computes purchase accuracy, co-purchase PMI, concentration,
//!   token efficiency and dissemination reports.

pub mod agent;
pub mod backend;
pub mod config;
pub mod error;
pub mod eval;
pub mod graph;
pub mod memory;
pub mod prompts;
pub mod rng;
pub mod sandbox;

pub use error::{Error, Result};
