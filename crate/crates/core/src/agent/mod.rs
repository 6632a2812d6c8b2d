//! Agent cognition: personas, planning, reflection and the two-stage
//! decision pipeline.

mod action;
mod cognition;
mod persona;
mod state;

pub use action::{ActionDecision, ActionType, Target, TargetKind};
pub use cognition::{
    decide_stage2, needs_plan, plan, reflect, stage1_request, stage2_request, summarize_stage1, validate_reply,
    DecisionOutcome, Environment, VisibleProduct,
};
pub use persona::{generate_persona, read_personas, write_personas, AgeDistribution, Persona};
pub use state::{AgentConfig, AgentState, Location, Plan, Reflection};
