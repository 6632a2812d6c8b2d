use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::catalog::{Catalog, Product};
use super::events::{EventKind, EventLog};
use super::shop;
use super::social::{injection_text, Polarity, SocialEvent, SocialKind};
use crate::agent::{
    self, ActionDecision, ActionType, AgentState, Environment, Location, Target, VisibleProduct,
};
use crate::backend::{Backend, Category};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::graph::RelationGraph;
use crate::memory::{self, MemoryBank, MemoryStore, Observation};
use crate::prompts::{self, headline, ImageRef, TEMPLATE_VERSION};
use crate::rng::{derive_seed, mix64, purpose, rng_for};

/// Per-agent state of the shopping system.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ShopSession {
    pub page: u32,
    pub visible: Vec<String>,
    pub details_viewed: BTreeSet<String>,
    pub last_purchase: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Purchase {
    pub agent: u32,
    pub product_id: String,
    pub round: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiveStreamRecord {
    pub host: u32,
    pub product_id: String,
    pub round: u32,
    pub audience: usize,
}

/// The whole simulated world. Mutated only by the driver; everything in it
/// is serialisable so a run can be paused and resumed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub catalog: Catalog,
    pub graph: RelationGraph,
    pub agents: Vec<AgentState>,
    pub inboxes: Vec<Vec<SocialEvent>>,
    pub sessions: Vec<ShopSession>,
    /// Purchase count per catalog index.
    pub sales: Vec<u64>,
    pub ledger: Vec<Purchase>,
    pub live_streams: Vec<LiveStreamRecord>,
    /// Rounds completed so far.
    pub round: u32,
    pub bank: Option<MemoryBank>,
    pub log: EventLog,
}

pub(crate) fn product_line(p: &Product, sales: u64) -> String {
    format!(
        "- {} | {} | ${:.2} | sold {}: {}",
        p.title, p.category, p.price, sales, p.description
    )
}

impl WorldState {
    /// Builds the configured graph and initialises the society on it.
    pub fn initialize(cfg: &RunConfig, catalog: Catalog, backend: &Backend) -> Result<Self> {
        cfg.validate()?;
        let graph = cfg.society.build_graph()?;
        Self::with_graph(cfg, catalog, graph, backend)
    }

    /// Generates personas, flags superstars and, with fast memory on,
    /// precomputes the memory bank.
    pub fn with_graph(cfg: &RunConfig, catalog: Catalog, graph: RelationGraph, backend: &Backend) -> Result<Self> {
        if catalog.is_empty() {
            return Err(Error::Validation("catalog is empty".into()));
        }
        let n = graph.node_count();
        let categories = catalog.categories();
        let personas = (0..n as u64)
            .into_par_iter()
            .map(|i| {
                agent::generate_persona(
                    derive_seed(cfg.run.seed, &[purpose::PERSONA, i]),
                    &categories,
                    &cfg.agent.ages,
                    backend,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let star_count = (n as f64 * cfg.agent.superstar_fraction).round() as usize;
        let ids: Vec<usize> = (0..n).collect();
        let mut rng = rng_for(cfg.run.seed, &[purpose::SUPERSTAR]);
        let stars: BTreeSet<usize> = ids.choose_multiple(&mut rng, star_count.min(n)).copied().collect();
        let agents: Vec<AgentState> = personas
            .into_iter()
            .enumerate()
            .map(|(i, p)| AgentState::new(i as u32, p, MemoryStore::from_config(&cfg.memory), stars.contains(&i)))
            .collect();
        let bank = if cfg.run.fast_memory {
            Some(MemoryBank::build(backend, cfg.memory.summary_cap)?)
        } else {
            None
        };
        let mut world = WorldState {
            sales: vec![0; catalog.len()],
            catalog,
            graph,
            inboxes: vec![Vec::new(); n],
            sessions: vec![ShopSession::default(); n],
            agents,
            ledger: Vec::new(),
            live_streams: Vec::new(),
            round: 0,
            bank,
            log: EventLog::default(),
        };
        world.log.push(
            0,
            None,
            EventKind::RunStart,
            json!({
                "agents": n,
                "edges": world.graph.edge_count(),
                "topology": world.graph.kind(),
                "products": world.catalog.len(),
                "fast_memory": cfg.run.fast_memory,
                "config_hash": format!("{:016x}", cfg.hash()),
                "template_version": TEMPLATE_VERSION,
            }),
        );
        for a in &world.agents {
            world.log.push(
                0,
                Some(a.id),
                EventKind::Persona,
                json!({
                    "name": a.persona.name,
                    "age": a.persona.age,
                    "gender": a.persona.gender,
                    "occupation": a.persona.occupation,
                    "superstar": a.superstar,
                }),
            );
        }
        world.log_backend_calls(None, backend);
        Ok(world)
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    fn current_round(&self) -> u32 {
        self.round + 1
    }

    /// Drains the meter journal into one event.
    pub(crate) fn log_backend_calls(&mut self, agent: Option<u32>, backend: &Backend) {
        let mut records = backend.meter().drain_journal();
        if records.is_empty() {
            return;
        }
        if agent.is_none() {
            // initialisation runs in parallel: canonical order keeps logs stable
            records.sort_by_key(|r| {
                (
                    r.category as u8,
                    r.kind as u8,
                    r.usage.input_tokens,
                    r.usage.output_tokens,
                )
            });
        }
        let round = if agent.is_some() { self.current_round() } else { self.round };
        self.log.push(round, agent, EventKind::BackendCalls, json!({ "calls": records }));
    }

    /// Ingests an observation for agent `i` and logs the outcome.
    pub fn ingest(&mut self, i: u32, o: &Observation, backend: &Backend, cfg: &RunConfig) -> Result<()> {
        let round = o.timestamp;
        let bank = if cfg.run.fast_memory { self.bank.as_ref() } else { None };
        let out = self.agents[i as usize].observe(o, bank, backend, &cfg.memory)?;
        if out.bank_miss {
            self.log.push(round, Some(i), EventKind::BankMiss, json!({ "action": o.action }));
        }
        self.log.push(
            round,
            Some(i),
            EventKind::Ingest,
            json!({
                "seq": out.record.seq,
                "fast_path": out.fast_path,
                "importance": out.record.importance,
                "summary": out.record.summary,
            }),
        );
        if !out.promoted.is_empty() {
            self.log.push(round, Some(i), EventKind::Promotion, json!({ "seqs": out.promoted }));
        }
        Ok(())
    }

    /// Turns pending inbox messages into one observation.
    pub fn deliver_inbox(&mut self, i: u32, backend: &Backend, cfg: &RunConfig) -> Result<bool> {
        let inbox = std::mem::take(&mut self.inboxes[i as usize]);
        if inbox.is_empty() {
            return Ok(false);
        }
        let rendered: Vec<String> = inbox.iter().map(SocialEvent::render).collect();
        let text = format!("{}: {}", headline::RECEIVED, rendered.join(" | "));
        let o = Observation::new(i, self.current_round(), None, text);
        self.ingest(i, &o, backend, cfg)?;
        Ok(true)
    }

    fn visible_products(&self, i: usize) -> Vec<VisibleProduct> {
        let s = &self.sessions[i];
        s.visible
            .iter()
            .filter_map(|id| {
                let idx = self.catalog.index_of(id)?;
                let p = &self.catalog.products()[idx];
                Some(VisibleProduct {
                    product_id: p.product_id.clone(),
                    title: p.title.clone(),
                    category: p.category.clone(),
                    price: p.price,
                    sales: self.sales[idx],
                    details_viewed: s.details_viewed.contains(id),
                    image: p.image(),
                })
            })
            .collect()
    }

    fn friends_of(&self, i: u32) -> Vec<(u32, String)> {
        self.graph
            .neighbors(i)
            .iter()
            .map(|&f| (f, self.agents[f as usize].persona.name.clone()))
            .collect()
    }

    fn recommend_into_session(&mut self, i: u32, cfg: &RunConfig, page: u32) -> Vec<usize> {
        let picked = shop::recommend(
            &self.catalog,
            &self.agents[i as usize].persona,
            &self.sales,
            &cfg.run.recommender,
            cfg.run.seed,
            &[u64::from(i), u64::from(self.current_round()), u64::from(page)],
        );
        let s = &mut self.sessions[i as usize];
        s.page = page;
        s.visible = picked
            .iter()
            .map(|&j| self.catalog.products()[j].product_id.clone())
            .collect();
        picked
    }

    /// Legal actions and visible items for agent `i` this round.
    pub fn environment(&self, i: u32, cfg: &RunConfig) -> Environment {
        let idx = i as usize;
        let agent = &self.agents[idx];
        let mut env = Environment {
            location: agent.location,
            decision_key: derive_seed(cfg.run.seed, &[u64::from(self.current_round()), u64::from(i)]),
            ..Default::default()
        };
        match agent.location {
            Location::Outside => {
                env.legal_actions = vec![ActionType::EnterShopping, ActionType::EnterSocial, ActionType::Idle];
            }
            Location::Shopping => {
                env.products = self.visible_products(idx);
                env.legal_actions = vec![ActionType::Browse, ActionType::Search, ActionType::Page];
                if !env.products.is_empty() {
                    env.legal_actions.extend([ActionType::ViewDetails, ActionType::Purchase]);
                }
                env.legal_actions.extend([ActionType::EnterSocial, ActionType::Idle]);
            }
            Location::Social => {
                env.friends = self.friends_of(i);
                if !env.friends.is_empty() {
                    env.legal_actions.push(ActionType::Chat);
                }
                env.legal_actions.push(ActionType::Post);
                if agent.superstar {
                    // a superstar may feature anything it has seen in the shop
                    env.products = self.visible_products(idx);
                    if !env.products.is_empty() {
                        env.legal_actions.push(ActionType::LiveStream);
                    }
                }
                env.legal_actions.extend([ActionType::EnterShopping, ActionType::Idle]);
            }
        }
        env
    }

    fn deliver(&mut self, recipients: &[u32], event: SocialEvent) {
        for &r in recipients {
            self.inboxes[r as usize].push(event.clone());
        }
    }

    fn reject(&mut self, i: u32, decision: &ActionDecision, reason: &str) -> Observation {
        let round = self.current_round();
        self.log.push(
            round,
            Some(i),
            EventKind::Violation,
            json!({ "stage": "execute", "action": decision.action, "reason": reason }),
        );
        self.agents[i as usize].location = Location::Outside;
        Observation::new(i, round, Some(ActionType::Idle), format!("{} after an invalid attempt.", headline::IDLE))
    }

    /// Applies a decision to the world, logs its effects and returns the
    /// resulting observation for the agent's memory.
    pub fn execute_action(
        &mut self,
        i: u32,
        decision: &ActionDecision,
        backend: &Backend,
        cfg: &RunConfig,
    ) -> Result<Observation> {
        let round = self.current_round();
        let idx = i as usize;
        let name = self.agents[idx].persona.name.clone();
        let action = decision.action;
        let mut detail = json!({});
        let obs = match action {
            ActionType::EnterShopping | ActionType::Page => {
                let page = if action == ActionType::Page {
                    self.sessions[idx].page + 1
                } else {
                    self.sessions[idx].details_viewed.clear();
                    0
                };
                self.agents[idx].location = Location::Shopping;
                let picked = self.recommend_into_session(i, cfg, page);
                let head = if action == ActionType::Page {
                    format!("{} and saw {} products.", headline::PAGE, picked.len())
                } else {
                    format!("{} and saw {} recommended products.", headline::ENTER_SHOPPING, picked.len())
                };
                let mut text = head;
                let mut images = Vec::new();
                for &j in &picked {
                    let p = &self.catalog.products()[j];
                    text.push('\n');
                    text.push_str(&product_line(p, self.sales[j]));
                    images.extend(p.image());
                }
                detail = json!({ "page": page, "visible": self.sessions[idx].visible });
                Observation::new(i, round, Some(action), text).with_images(images)
            }
            ActionType::EnterSocial => {
                self.agents[idx].location = Location::Social;
                Observation::new(i, round, Some(action), format!("{} and read the feed.", headline::ENTER_SOCIAL))
            }
            ActionType::Idle => {
                self.agents[idx].location = Location::Outside;
                Observation::new(i, round, Some(action), format!("{} and rested.", headline::IDLE))
            }
            ActionType::Browse => {
                let items = self.visible_products(idx);
                let listing: Vec<String> = items.iter().map(|p| format!("{} ({})", p.title, p.category)).collect();
                let images: Vec<ImageRef> = items.iter().filter_map(|p| p.image.clone()).collect();
                let text = if listing.is_empty() {
                    format!("{} but nothing was shown.", headline::BROWSE)
                } else {
                    format!("{}: {}.", headline::BROWSE, listing.join(", "))
                };
                Observation::new(i, round, Some(action), text).with_images(images)
            }
            ActionType::Search => {
                let Some(Target::Query(q)) = &decision.target else {
                    return Ok(self.reject(i, decision, "search without a query"));
                };
                let hits = shop::search(
                    &self.catalog,
                    q,
                    cfg.run.search_limit,
                    derive_seed(cfg.run.seed, &[purpose::SEARCH, u64::from(round), u64::from(i)]),
                );
                let s = &mut self.sessions[idx];
                s.visible = hits
                    .iter()
                    .map(|&j| self.catalog.products()[j].product_id.clone())
                    .collect();
                s.page = 0;
                let found: Vec<String> = hits
                    .iter()
                    .map(|&j| {
                        let p = &self.catalog.products()[j];
                        format!("{} ({})", p.title, p.category)
                    })
                    .collect();
                detail = json!({ "query": q, "results": self.sessions[idx].visible });
                let text = if found.is_empty() {
                    format!("{} \"{q}\" and found nothing.", headline::SEARCH)
                } else {
                    format!("{} \"{q}\" and found: {}.", headline::SEARCH, found.join(", "))
                };
                Observation::new(i, round, Some(action), text)
            }
            ActionType::ViewDetails | ActionType::Purchase => {
                let ids = decision.product_ids();
                let Some(id) = ids.first().filter(|_| ids.len() == 1) else {
                    return Ok(self.reject(i, decision, "expected exactly one product"));
                };
                if !self.sessions[idx].visible.contains(id) {
                    return Ok(self.reject(i, decision, "product is not visible"));
                }
                let j = self.catalog.index_of(id).expect("visible products are in the catalog");
                let p = self.catalog.products()[j].clone();
                if action == ActionType::ViewDetails {
                    self.sessions[idx].details_viewed.insert(id.clone());
                    let text = format!(
                        "{}{} ({}, ${:.2}, sold {}): {}",
                        headline::VIEWED,
                        p.title,
                        p.category,
                        p.price,
                        self.sales[j],
                        p.description
                    );
                    detail = json!({ "product_id": id });
                    Observation::new(i, round, Some(action), text).with_images(p.image().into_iter().collect())
                } else {
                    self.sales[j] += 1;
                    self.ledger.push(Purchase {
                        agent: i,
                        product_id: id.clone(),
                        round,
                    });
                    self.sessions[idx].last_purchase = Some(p.title.clone());
                    self.log.push(
                        round,
                        Some(i),
                        EventKind::Purchase,
                        json!({ "product_id": id, "category": p.category, "price": p.price }),
                    );
                    detail = json!({ "product_id": id });
                    let text = format!("{}{} ({}) for ${:.2}.", headline::PURCHASED, p.title, p.category, p.price);
                    Observation::new(i, round, Some(action), text)
                }
            }
            ActionType::Chat => {
                let Some(Target::Friend(f)) = decision.target else {
                    return Ok(self.reject(i, decision, "chat without a friend"));
                };
                if !self.graph.is_adjacent(i, f) {
                    return Ok(self.reject(i, decision, "chat target is not a friend"));
                }
                let friend = self.agents[f as usize].persona.name.clone();
                let context = self.agents[idx].last_observation.clone();
                let msg = backend
                    .chat(&prompts::chat_message(&name, &friend, &context), Category::Social)?
                    .text
                    .trim()
                    .to_string();
                let event = SocialEvent {
                    kind: SocialKind::Chat,
                    sender: Some(i),
                    sender_name: name.clone(),
                    polarity: Polarity::classify(&msg),
                    content: msg.clone(),
                    product_id: None,
                    round,
                };
                self.deliver(&[f], event);
                self.log_delivery(i, SocialKind::Chat, &[f], &msg, None);
                Observation::new(i, round, Some(action), format!("{} {friend}: {msg}", headline::CHATTED))
            }
            ActionType::Post => {
                let context = self.agents[idx].last_observation.clone();
                let recent = self.sessions[idx].last_purchase.clone();
                let msg = backend
                    .chat(&prompts::post_message(&name, &context, recent.as_deref()), Category::Social)?
                    .text
                    .trim()
                    .to_string();
                let recipients: Vec<u32> = self.graph.neighbors(i).to_vec();
                let event = SocialEvent {
                    kind: SocialKind::Post,
                    sender: Some(i),
                    sender_name: name.clone(),
                    polarity: Polarity::classify(&msg),
                    content: msg.clone(),
                    product_id: None,
                    round,
                };
                self.deliver(&recipients, event);
                self.log_delivery(i, SocialKind::Post, &recipients, &msg, None);
                Observation::new(i, round, Some(action), format!("{}: {msg}", headline::POSTED))
            }
            ActionType::LiveStream => {
                if !self.agents[idx].superstar {
                    return Ok(self.reject(i, decision, "only superstars may live stream"));
                }
                let ids = decision.product_ids();
                let Some(id) = ids.first() else {
                    return Ok(self.reject(i, decision, "live stream without a product"));
                };
                let Some(p) = self.catalog.get(id).cloned() else {
                    return Ok(self.reject(i, decision, "unknown product"));
                };
                let mut audience: Vec<u32> = self.graph.neighbors(i).to_vec();
                if cfg.run.live_bonus_audience > 0 {
                    let others: Vec<u32> = (0..self.agents.len() as u32)
                        .filter(|&a| a != i && !self.graph.is_adjacent(i, a))
                        .collect();
                    let mut rng = rng_for(cfg.run.seed, &[purpose::AUDIENCE, u64::from(round), u64::from(i)]);
                    audience.extend(others.choose_multiple(&mut rng, cfg.run.live_bonus_audience));
                    audience.sort_unstable();
                }
                let img = p.image();
                let pitch = backend
                    .chat(&prompts::live_pitch(&name, &p.title, &p.description, img.as_ref()), Category::Social)?
                    .text
                    .trim()
                    .to_string();
                let event = SocialEvent {
                    kind: SocialKind::LiveStream,
                    sender: Some(i),
                    sender_name: name.clone(),
                    polarity: Polarity::classify(&pitch),
                    content: pitch.clone(),
                    product_id: Some(id.clone()),
                    round,
                };
                self.deliver(&audience, event);
                self.log_delivery(i, SocialKind::LiveStream, &audience, &pitch, Some(id));
                self.live_streams.push(LiveStreamRecord {
                    host: i,
                    product_id: id.clone(),
                    round,
                    audience: audience.len(),
                });
                Observation::new(
                    i,
                    round,
                    Some(action),
                    format!("{} about {} for {} viewers: {pitch}", headline::STREAMED, p.title, audience.len()),
                )
            }
        };
        self.log.push(
            round,
            Some(i),
            EventKind::Action,
            json!({ "action": action, "observation": obs.headline(), "detail": detail }),
        );
        Ok(obs)
    }

    fn log_delivery(&mut self, sender: u32, kind: SocialKind, recipients: &[u32], content: &str, product: Option<&String>) {
        self.log.push(
            self.current_round(),
            Some(sender),
            EventKind::Delivery,
            json!({
                "kind": kind,
                "recipients": recipients,
                "content": content,
                "product_id": product,
                "polarity": Polarity::classify(content),
            }),
        );
    }

    /// Places positive or negative information about a product in the
    /// targets' inboxes; it is ingested at the start of their next turn.
    pub fn inject_social_info(
        &mut self,
        targets: &[u32],
        product_id: &str,
        polarity: Polarity,
        text: Option<&str>,
    ) -> Result<usize> {
        if polarity == Polarity::Neutral {
            return Err(Error::param("polarity", "injections must be positive or negative"));
        }
        let product = self
            .catalog
            .get(product_id)
            .ok_or_else(|| Error::Validation(format!("unknown product {product_id}")))?;
        let content = text.map_or_else(|| injection_text(&product.title, polarity), str::to_string);
        for &t in targets {
            if t as usize >= self.agents.len() {
                return Err(Error::param("targets", format!("agent {t} does not exist")));
            }
        }
        let event = SocialEvent {
            kind: SocialKind::InjectedInfo,
            sender: None,
            sender_name: "news".into(),
            content: content.clone(),
            product_id: Some(product_id.to_string()),
            polarity,
            round: self.round,
        };
        for &t in targets {
            self.inboxes[t as usize].push(event.clone());
            self.log.push(
                self.round,
                Some(t),
                EventKind::Injection,
                json!({ "product_id": product_id, "polarity": polarity, "content": content }),
            );
        }
        Ok(targets.len())
    }

    /// One agent's turn: inbox, optional plan/reflect, two-stage decision,
    /// execution and memory ingest.
    pub fn agent_turn(&mut self, i: u32, backend: &Backend, cfg: &RunConfig) -> Result<()> {
        let round = self.current_round();
        let idx = i as usize;
        self.deliver_inbox(i, backend, cfg)?;
        if agent::needs_plan(&self.agents[idx], &cfg.agent, round) {
            let plan = agent::plan(&mut self.agents[idx], backend, &cfg.agent, &cfg.memory, round)?;
            self.log.push(round, Some(i), EventKind::Plan, json!({ "goals": plan.goals }));
        }
        if let Some(r) = agent::reflect(&mut self.agents[idx], backend, &cfg.agent, &cfg.memory, round)? {
            self.log.push(
                round,
                Some(i),
                EventKind::Reflection,
                json!({ "questions": r.salient_questions, "insights": r.insights }),
            );
        }
        let p1 = agent::summarize_stage1(&self.agents[idx], backend, &cfg.memory, round)?;
        let env = self.environment(i, cfg);
        let outcome = agent::decide_stage2(&self.agents[idx], &p1, &env, backend)?;
        for v in &outcome.violations {
            self.log
                .push(round, Some(i), EventKind::Violation, json!({ "stage": "decide", "reason": v }));
        }
        let d = &outcome.decision;
        self.log.push(
            round,
            Some(i),
            EventKind::Decision,
            json!({ "action": d.action, "target": d.target, "rationale": d.rationale, "fallback": d.fallback }),
        );
        let obs = self.execute_action(i, d, backend, cfg)?;
        self.ingest(i, &obs, backend, cfg)?;
        self.log_backend_calls(Some(i), backend);
        Ok(())
    }

    fn round_inner(&mut self, backend: &Backend, cfg: &RunConfig) -> Result<()> {
        let round = self.current_round();
        let ledger_before = self.ledger.len();
        for i in 0..self.agents.len() as u32 {
            self.agent_turn(i, backend, cfg)?;
        }
        for i in 0..self.agents.len() {
            let seed = derive_seed(cfg.run.seed, &[purpose::SWEEP, u64::from(round), i as u64]);
            let removed = memory::forgetting_sweep(&mut self.agents[i].memory, &cfg.memory.forgetting, seed);
            if !removed.is_empty() {
                let seqs: Vec<u64> = removed.iter().map(|r| r.record.seq).collect();
                self.log
                    .push(round, Some(i as u32), EventKind::Forgetting, json!({ "seqs": seqs }));
            }
        }
        let meter = backend.meter().snapshot();
        self.log.push(
            round,
            None,
            EventKind::RoundEnd,
            json!({
                "purchases": self.ledger.len() - ledger_before,
                "calls": meter.calls,
                "tokens": meter.total.total(),
            }),
        );
        self.round = round;
        Ok(())
    }

    /// Runs one round. On a backend error the world and meter are rolled
    /// back to the start of the round, so a checkpoint of `self` resumes
    /// cleanly.
    pub fn run_round(&mut self, backend: &Backend, cfg: &RunConfig) -> Result<()> {
        let saved = self.clone();
        let saved_meter = backend.meter().snapshot();
        let result = self.round_inner(backend, cfg);
        if result.is_err() {
            *self = saved;
            backend.meter().restore(&saved_meter);
        }
        result
    }

    /// Runs rounds until `total` rounds have completed.
    pub fn run_until(&mut self, total: u32, backend: &Backend, cfg: &RunConfig) -> Result<()> {
        while self.round < total {
            self.run_round(backend, cfg)?;
            tracing::debug!(round = self.round, calls = backend.meter().snapshot().calls, "round complete");
        }
        Ok(())
    }

    /// Purchases recorded in the log, per product id.
    pub fn purchase_counts(&self) -> Vec<(String, u64)> {
        self.catalog
            .products()
            .iter()
            .zip(&self.sales)
            .filter(|(_, &s)| s > 0)
            .map(|(p, &s)| (p.product_id.clone(), s))
            .collect()
    }

    /// Stable digest of the serialised log.
    pub fn log_digest(&self) -> u64 {
        mix64(crate::rng::fnv1a(&self.log.to_jsonl()))
    }
}

/// Initialises a world and runs every configured round.
pub fn run_simulation(cfg: &RunConfig, catalog: Catalog, backend: &Backend) -> Result<WorldState> {
    let mut world = WorldState::initialize(cfg, catalog, backend)?;
    world.run_until(cfg.run.rounds, backend, cfg)?;
    Ok(world)
}
