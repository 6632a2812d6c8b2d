//! Planning, reflection and the two-stage decision pipeline.

use serde::{Deserialize, Serialize};

use super::action::{ActionDecision, ActionType, Target, TargetKind};
use super::state::{AgentConfig, AgentState, Location, Plan, Reflection};
use crate::backend::{Backend, Candidate, Category, ChatRequest, SelectionContext};
use crate::error::Result;
use crate::memory::MemoryConfig;
use crate::prompts::{self, field, ImageRef, ProductLine, Stage2};

const PLAN_IMPORTANCE: f64 = 0.5;

/// One backend call over persona and top memories; the plan is stored as a
/// short-term memory.
pub fn plan(agent: &mut AgentState, backend: &Backend, cfg: &AgentConfig, mem: &MemoryConfig, now: u32) -> Result<Plan> {
    let memories = agent.memory_lines(mem.retrieve_top_n, now, mem);
    let req = prompts::plan(&agent.persona.name, &agent.persona.block(), &memories, cfg.plan_horizon);
    let reply = backend.chat(&req, Category::Planning)?;
    let mut goals: Vec<String> = reply
        .text
        .lines()
        .filter_map(|l| l.trim().strip_prefix(field::GOAL).map(|g| g.trim().to_string()))
        .filter(|g| !g.is_empty())
        .collect();
    if goals.is_empty() && !reply.text.trim().is_empty() {
        goals.push(reply.text.trim().to_string());
    }
    let text = format!("Plan for the next {} rounds: {}", cfg.plan_horizon, goals.join(" "));
    let summary: String = text.chars().take(mem.summary_cap).collect();
    let embedding = backend.embed(&summary, Category::Planning)?;
    agent.memory.push_short_term(summary, embedding, PLAN_IMPORTANCE, now);
    let plan = Plan {
        goals,
        created_at: now,
        horizon: cfg.plan_horizon,
    };
    agent.plan = Some(plan.clone());
    Ok(plan)
}

pub fn needs_plan(agent: &AgentState, cfg: &AgentConfig, now: u32) -> bool {
    match &agent.plan {
        None => true,
        Some(p) => cfg.plan_every > 0 && now >= p.created_at + cfg.plan_every,
    }
}

/// Reflects once accumulated importance reaches the threshold: one call for
/// salient questions, one for insights over retrieved memories. Insights are
/// written to long-term memory. Below threshold nothing is called.
pub fn reflect(
    agent: &mut AgentState,
    backend: &Backend,
    cfg: &AgentConfig,
    mem: &MemoryConfig,
    now: u32,
) -> Result<Option<Reflection>> {
    if agent.importance_since_reflection < cfg.reflection_threshold {
        return Ok(None);
    }
    let memories = agent.memory_lines(cfg.reflection_top_n, now, mem);
    let q = backend.chat(&prompts::reflection_questions(&agent.persona.name, &memories), Category::Reflection)?;
    let questions: Vec<String> = q
        .text
        .lines()
        .map(|l| l.trim().trim_start_matches("- ").to_string())
        .filter(|l| !l.is_empty())
        .collect();
    let a = backend.chat(
        &prompts::reflection_insights(&agent.persona.name, &questions, &memories),
        Category::Reflection,
    )?;
    let insights: Vec<String> = a
        .text
        .lines()
        .filter_map(|l| l.trim().strip_prefix(field::INSIGHT).map(|s| s.trim().to_string()))
        .filter(|s| !s.is_empty())
        .collect();
    // importance of an insight: mean importance of what it was drawn from
    let source_importance = {
        let vals: Vec<f64> = agent
            .memory
            .short_term
            .iter()
            .chain(agent.memory.long_term.iter().map(|r| &r.record))
            .filter(|r| memories.iter().any(|m| m.ends_with(&r.summary)))
            .map(|r| r.importance)
            .collect();
        if vals.is_empty() {
            0.5
        } else {
            vals.iter().sum::<f64>() / vals.len() as f64
        }
    };
    for insight in &insights {
        let summary: String = format!("Insight: {insight}").chars().take(mem.summary_cap).collect();
        let embedding = backend.embed(&summary, Category::Reflection)?;
        agent.memory.push_long_term(summary, embedding, source_importance, now);
    }
    agent.importance_since_reflection = 0.0;
    Ok(Some(Reflection {
        salient_questions: questions,
        insights,
        created_at: now,
    }))
}

/// Stage 1: intent summary from persona, last observation and a few
/// memories. No environment details are included.
pub fn summarize_stage1(agent: &AgentState, backend: &Backend, mem: &MemoryConfig, now: u32) -> Result<String> {
    let memories = agent.memory_lines(mem.retrieve_top_n, now, mem);
    let last = if agent.last_observation.is_empty() {
        "Nothing has happened yet."
    } else {
        agent.last_observation.as_str()
    };
    let req = stage1_request(agent, now, last, &memories);
    Ok(backend.chat(&req, Category::Prompting)?.text.trim().to_string())
}

pub fn stage1_request(agent: &AgentState, now: u32, last: &str, memories: &[String]) -> ChatRequest {
    prompts::stage1(&agent.persona.name, &agent.persona.block(), now, last, memories)
}

/// A product as shown to the deciding agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibleProduct {
    pub product_id: String,
    pub title: String,
    pub category: String,
    pub price: f64,
    pub sales: u64,
    pub details_viewed: bool,
    pub image: Option<ImageRef>,
}

/// What the agent can see and do right now.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Environment {
    pub location: Location,
    pub legal_actions: Vec<ActionType>,
    pub products: Vec<VisibleProduct>,
    pub friends: Vec<(u32, String)>,
    /// Nonzero for selection decisions: pick exactly this many products.
    pub select_count: usize,
    /// Hidden ground truth; only scripted providers ever see it.
    pub ground_truth: Option<Vec<String>>,
    /// Stable key for scripted policies.
    pub decision_key: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionOutcome {
    pub decision: ActionDecision,
    /// Reasons replies were rejected, in order.
    pub violations: Vec<String>,
}

fn parse_reply(reply: &str) -> (Option<String>, Option<String>) {
    let mut action = None;
    let mut target = None;
    for line in reply.lines() {
        let l = line.trim();
        if let Some(a) = l.strip_prefix(field::ACTION) {
            action.get_or_insert_with(|| a.trim().to_string());
        } else if let Some(t) = l.strip_prefix(field::TARGET) {
            target.get_or_insert_with(|| t.trim().to_string());
        }
    }
    (action, target)
}

fn resolve_product(env: &Environment, raw: &str) -> Option<String> {
    let id = raw.trim().trim_matches(|c| c == '[' || c == ']' || c == '"').trim();
    env.products
        .iter()
        .find(|p| p.product_id == id || p.title.eq_ignore_ascii_case(id))
        .map(|p| p.product_id.clone())
}

fn resolve_friend(env: &Environment, raw: &str) -> Option<u32> {
    let s = raw.trim().trim_matches(|c| c == '[' || c == ']').trim();
    if let Ok(id) = s.parse::<u32>() {
        return env.friends.iter().any(|(f, _)| *f == id).then_some(id);
    }
    env.friends
        .iter()
        .find(|(_, name)| name.eq_ignore_ascii_case(s))
        .map(|(id, _)| *id)
}

/// Checks a reply against the environment; the error is the rejection reason.
pub fn validate_reply(
    reply: &str,
    env: &Environment,
    superstar: bool,
) -> std::result::Result<(ActionType, Option<Target>), String> {
    let (action, target) = parse_reply(reply);
    let action = action.ok_or("missing ACTION line")?;
    let action: ActionType = action.parse().map_err(|_| format!("unknown action {action:?}"))?;
    if !env.legal_actions.contains(&action) {
        return Err(format!("{action} is not a legal action here"));
    }
    if action == ActionType::LiveStream && !superstar {
        return Err("only superstar agents may live stream".into());
    }
    let raw = target.unwrap_or_default();
    let target = match action.target_kind() {
        TargetKind::None => None,
        TargetKind::Query => {
            let q = raw.trim().trim_matches('"').trim();
            if q.is_empty() || q.eq_ignore_ascii_case("none") {
                return Err("search needs a query".into());
            }
            Some(Target::Query(q.to_string()))
        }
        TargetKind::Friend => {
            let id = resolve_friend(env, &raw).ok_or_else(|| format!("{raw:?} is not a friend"))?;
            Some(Target::Friend(id))
        }
        TargetKind::Product => {
            let mut ids = Vec::new();
            for part in raw.split(',').filter(|p| !p.trim().is_empty()) {
                let id = resolve_product(env, part).ok_or_else(|| format!("{:?} is not a visible product", part.trim()))?;
                if ids.contains(&id) {
                    return Err(format!("{id} selected twice"));
                }
                ids.push(id);
            }
            let want = if env.select_count > 0 && action == ActionType::Purchase {
                env.select_count
            } else {
                1
            };
            if ids.len() != want {
                return Err(format!("expected {want} product id(s), got {}", ids.len()));
            }
            Some(Target::Products(ids))
        }
    };
    Ok((action, target))
}

pub fn stage2_request(agent: &AgentState, p1: &str, env: &Environment) -> ChatRequest {
    let legal: Vec<&str> = env.legal_actions.iter().map(|a| a.as_str()).collect();
    let products: Vec<ProductLine> = env
        .products
        .iter()
        .map(|p| ProductLine {
            product_id: p.product_id.clone(),
            title: p.title.clone(),
            category: p.category.clone(),
            price: p.price,
            sales: p.sales,
            details_viewed: p.details_viewed,
            image: p.image.clone(),
        })
        .collect();
    prompts::stage2(&Stage2 {
        name: &agent.persona.name,
        thoughts: p1,
        location: env.location.as_str(),
        legal_actions: &legal,
        select_count: env.select_count,
        products: &products,
        friends: &env.friends,
    })
}

/// Stage 2: picks a legal action from P1 and the environment. Scripted
/// providers answer selection decisions directly. An illegal reply is
/// reprompted once; a second failure falls back to idle.
pub fn decide_stage2(agent: &AgentState, p1: &str, env: &Environment, backend: &Backend) -> Result<DecisionOutcome> {
    if env.select_count > 0 {
        let ctx = SelectionContext {
            key: env.decision_key,
            candidates: env
                .products
                .iter()
                .map(|p| Candidate {
                    product_id: p.product_id.clone(),
                    sales: p.sales,
                })
                .collect(),
            select_count: env.select_count,
            ground_truth: env.ground_truth.clone(),
        };
        if let Some(ids) = backend.select(&ctx) {
            return Ok(DecisionOutcome {
                decision: ActionDecision {
                    action: ActionType::Purchase,
                    target: Some(Target::Products(ids?)),
                    rationale: p1.to_string(),
                    fallback: false,
                },
                violations: Vec::new(),
            });
        }
    }
    let req = stage2_request(agent, p1, env);
    let first = backend.chat(&req, Category::Prompting)?.text;
    let mut violations = Vec::new();
    let reason = match validate_reply(&first, env, agent.superstar) {
        Ok((action, target)) => return Ok(accept(action, target, p1, violations)),
        Err(reason) => reason,
    };
    violations.push(reason.clone());
    let retry = prompts::stage2_retry(&req, &first, &reason);
    let second = backend.chat(&retry, Category::Prompting)?.text;
    match validate_reply(&second, env, agent.superstar) {
        Ok((action, target)) => Ok(accept(action, target, p1, violations)),
        Err(reason) => {
            violations.push(reason);
            let mut decision = ActionDecision::idle(p1);
            decision.fallback = true;
            Ok(DecisionOutcome { decision, violations })
        }
    }
}

fn accept(action: ActionType, target: Option<Target>, p1: &str, violations: Vec<String>) -> DecisionOutcome {
    DecisionOutcome {
        decision: ActionDecision {
            action,
            target,
            rationale: p1.to_string(),
            fallback: false,
        },
        violations,
    }
}
