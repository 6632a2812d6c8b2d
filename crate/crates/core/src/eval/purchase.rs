use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::accuracy::{user_hit, AccuracyReport, UserHit};
use crate::agent::{self, ActionType, AgentConfig, AgentState, Environment, Location, Target, VisibleProduct};
use crate::backend::Backend;
use crate::error::{Error, Result};
use crate::memory::{MemoryBank, MemoryConfig, MemoryStore, Observation};
use crate::prompts::headline;
use crate::rng::{derive_seed, purpose, rng_for};
use crate::sandbox::{
    build_recommendation_list, injection_text, product_line, Catalog, EventKind, EventLog, Polarity,
};

/// The four a@(a+b) settings as (a, b): 1@6, 1@10, 3@6, 3@10.
pub const STANDARD_SETTINGS: [(usize, usize); 4] = [(1, 5), (1, 9), (3, 3), (3, 7)];

/// A user's purchase history, oldest first.
pub type UserHistory = (String, Vec<String>);

/// Synthetic shoppers with two favourite categories each. A purchase comes
/// from a favourite with probability `focus`, otherwise from anywhere; no
/// product is bought twice.
pub fn synthetic_histories(catalog: &Catalog, users: usize, len: usize, focus: f64, seed: u64) -> Result<Vec<UserHistory>> {
    if len == 0 || len > catalog.len() {
        return Err(Error::param("len", format!("history length must lie in 1..={}", catalog.len())));
    }
    if !(0.0..=1.0).contains(&focus) {
        return Err(Error::param("focus", "must lie in [0, 1]"));
    }
    let categories = catalog.categories();
    Ok((0..users)
        .map(|u| {
            let mut rng = rng_for(seed, &[purpose::USERS, u as u64]);
            let favourites: Vec<&String> = categories.choose_multiple(&mut rng, 2).collect();
            let mut bought: Vec<String> = Vec::with_capacity(len);
            let mut seen = BTreeSet::new();
            while bought.len() < len {
                let pool: Vec<usize> = if rng.random::<f64>() < focus {
                    let c = favourites.choose(&mut rng).expect("at least one category");
                    catalog.in_category(c).to_vec()
                } else {
                    (0..catalog.len()).collect()
                };
                let fresh: Vec<usize> = pool.into_iter().filter(|i| !seen.contains(i)).collect();
                let Some(&i) = fresh.choose(&mut rng) else { continue };
                seen.insert(i);
                bought.push(catalog.products()[i].product_id.clone());
            }
            (format!("U{u:05}"), bought)
        })
        .collect())
}

/// One evaluation run over a fixed user set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurchaseEvalConfig {
    pub a: usize,
    pub b: usize,
    pub seed: u64,
    pub fast_memory: bool,
    /// Social information about the user's first held-out product, delivered
    /// before the shopping visit.
    pub injection: Option<Polarity>,
    pub memory: MemoryConfig,
    pub agent: AgentConfig,
}

impl PurchaseEvalConfig {
    pub fn new(a: usize, b: usize, seed: u64) -> Self {
        PurchaseEvalConfig {
            a,
            b,
            seed,
            fast_memory: true,
            injection: None,
            memory: MemoryConfig::default(),
            agent: AgentConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PurchaseEvalOutput {
    pub report: AccuracyReport,
    /// Selection (and injection) events, one block per user in input order.
    pub log: EventLog,
}

struct UserOutcome {
    hit: UserHit,
    abstained: bool,
    events: Vec<(EventKind, serde_json::Value)>,
}

fn sales_from_prefixes(catalog: &Catalog, users: &[UserHistory], a: usize) -> Vec<u64> {
    let mut sales = vec![0u64; catalog.len()];
    for (_, h) in users {
        for id in &h[..h.len() - a] {
            if let Some(i) = catalog.index_of(id) {
                sales[i] += 1;
            }
        }
    }
    sales
}

/// Runs the held-out purchase evaluation. For each user the persona is
/// generated and its preferences set from the history prefix, the prefix is
/// remembered, the last `a` purchases are hidden among `b` distractors, and
/// the agent picks `a` products through the two-stage decision.
pub fn run_purchase_eval(
    catalog: &Catalog,
    users: &[UserHistory],
    cfg: &PurchaseEvalConfig,
    backend: &Backend,
) -> Result<PurchaseEvalOutput> {
    if cfg.a == 0 {
        return Err(Error::param("a", "must be positive"));
    }
    if users.is_empty() {
        return Err(Error::Validation("no users to evaluate".into()));
    }
    cfg.memory.validate()?;
    for (u, h) in users {
        if h.len() <= cfg.a {
            return Err(Error::Validation(format!(
                "user {u}: history of {} purchases cannot hold out {}",
                h.len(),
                cfg.a
            )));
        }
        if let Some(bad) = h.iter().find(|id| catalog.get(id).is_none()) {
            return Err(Error::Validation(format!("user {u}: unknown product {bad}")));
        }
    }
    let bank = if cfg.fast_memory {
        Some(MemoryBank::build(backend, cfg.memory.summary_cap)?)
    } else {
        None
    };
    let sales = sales_from_prefixes(catalog, users, cfg.a);
    let categories = catalog.categories();
    let outcomes = users
        .par_iter()
        .enumerate()
        .map(|(idx, (user, history))| {
            evaluate_user(idx, user, history, catalog, &categories, &sales, bank.as_ref(), cfg, backend)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut log = EventLog::default();
    let mut hits = Vec::with_capacity(outcomes.len());
    let mut abstentions = 0;
    for (idx, o) in outcomes.into_iter().enumerate() {
        for (kind, payload) in o.events {
            log.push(0, Some(idx as u32), kind, payload);
        }
        abstentions += usize::from(o.abstained);
        hits.push(o.hit);
    }
    Ok(PurchaseEvalOutput {
        report: AccuracyReport::from_hits(cfg.a, cfg.b, hits, abstentions),
        log,
    })
}

#[allow(clippy::too_many_arguments)]
fn evaluate_user(
    idx: usize,
    user: &str,
    history: &[String],
    catalog: &Catalog,
    categories: &[String],
    sales: &[u64],
    bank: Option<&MemoryBank>,
    cfg: &PurchaseEvalConfig,
    backend: &Backend,
) -> Result<UserOutcome> {
    let seed = derive_seed(cfg.seed, &[purpose::USERS, idx as u64]);
    let split = history.len() - cfg.a;
    let (prefix, truth) = history.split_at(split);

    let mut persona = agent::generate_persona(seed, categories, &cfg.agent.ages, backend)?;
    let mut counts: BTreeMap<String, f64> = categories.iter().map(|c| (c.clone(), 0.0)).collect();
    for id in prefix {
        let p = catalog.get(id).expect("validated above");
        *counts.entry(p.category.clone()).or_default() += 1.0;
    }
    persona.set_preferences(counts);
    let mut agent = AgentState::new(idx as u32, persona, MemoryStore::from_config(&cfg.memory), false);
    let mut events = Vec::new();

    let listed: Vec<String> = prefix
        .iter()
        .map(|id| {
            let p = catalog.get(id).expect("validated above");
            format!("\"{}\" ({})", p.title, p.category)
        })
        .collect();
    let mut t = 1;
    let history_obs = Observation::new(agent.id, t, None, format!("{} {}.", headline::HISTORY, listed.join(", ")));
    agent.observe(&history_obs, bank, backend, &cfg.memory)?;

    if let Some(polarity) = cfg.injection {
        let target = catalog.get(&truth[0]).expect("validated above");
        let content = injection_text(&target.title, polarity);
        t += 1;
        let o = Observation::new(agent.id, t, None, format!("{}: from news: {content}", headline::RECEIVED));
        agent.observe(&o, bank, backend, &cfg.memory)?;
        events.push((
            EventKind::Injection,
            json!({ "user": user, "product_id": target.product_id, "polarity": polarity, "content": content }),
        ));
    }

    let list = build_recommendation_list(user, truth, cfg.b, catalog, seed)?;
    let mut text = format!(
        "{} and saw {} recommended products.",
        headline::ENTER_SHOPPING,
        list.items.len()
    );
    let mut images = Vec::new();
    let mut products = Vec::with_capacity(list.items.len());
    for id in &list.items {
        let i = catalog.index_of(id).expect("list drawn from catalog");
        let p = &catalog.products()[i];
        text.push('\n');
        text.push_str(&product_line(p, sales[i]));
        images.extend(p.image());
        products.push(VisibleProduct {
            product_id: p.product_id.clone(),
            title: p.title.clone(),
            category: p.category.clone(),
            price: p.price,
            sales: sales[i],
            details_viewed: true,
            image: p.image(),
        });
    }
    t += 1;
    let shop = Observation::new(agent.id, t, Some(ActionType::EnterShopping), text).with_images(images);
    agent.observe(&shop, bank, backend, &cfg.memory)?;
    agent.location = Location::Shopping;

    let p1 = agent::summarize_stage1(&agent, backend, &cfg.memory, t)?;
    let env = Environment {
        location: Location::Shopping,
        legal_actions: vec![ActionType::Purchase],
        products,
        friends: Vec::new(),
        select_count: cfg.a,
        ground_truth: Some(truth.to_vec()),
        decision_key: seed,
    };
    let outcome = agent::decide_stage2(&agent, &p1, &env, backend)?;
    let selected: Vec<String> = match (&outcome.decision.action, &outcome.decision.target) {
        (ActionType::Purchase, Some(Target::Products(ids))) if ids.len() == cfg.a => ids.clone(),
        _ => Vec::new(),
    };
    let abstained = selected.is_empty();
    let hit = user_hit(user, &selected, truth);
    events.push((
        EventKind::Selection,
        json!({
            "user": user,
            "items": list.items,
            "truth": truth,
            "selected": selected,
            "hits": hit.hits,
            "thoughts": p1,
        }),
    ));
    Ok(UserOutcome { hit, abstained, events })
}
