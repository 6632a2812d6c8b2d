//! Deterministic keyword-rule provider.
//!
//! Replies are pure functions of the request: the stub reads the template
//! marker on the first user line, parses the fields it needs, and answers in
//! the format the template asks for. Where a choice is needed it draws from a
//! hash of the request text, never from ambient state.

use std::collections::BTreeMap;

use super::embedding::{hash_embedding, DEFAULT_STUB_DIM};
use super::{BackendError, BackendKind, ChatReply, ChatRequest, Part, Provider, Role, TokenUsage};
use crate::prompts::{field, headline, marker, template_of};
use crate::rng::{hash_str, mix64};

/// ⌈chars / 4⌉, counting Unicode scalar values.
pub fn estimate_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}

/// Behavioural knobs of the stub's decision rules.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct StubProfile {
    /// Chance that a paging/browsing/social observation puts the agent in a
    /// shopping mood.
    pub intent_rate: f64,
    /// Chance of buying a product the agent is considering.
    pub purchase_rate: f64,
    /// Rounds after a purchase during which the agent is not looking to buy.
    pub satisfaction_rounds: u32,
    /// Relative weights of free actions (no product target required).
    pub action_weights: BTreeMap<String, f64>,
}

impl Default for StubProfile {
    fn default() -> Self {
        let action_weights = [
            ("idle", 4.0),
            ("enter_shopping", 3.0),
            ("enter_social", 2.0),
            ("page", 3.0),
            ("browse", 1.0),
            ("search", 1.0),
            ("chat", 1.5),
            ("post", 1.0),
            ("live_stream", 2.0),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        StubProfile {
            intent_rate: 0.35,
            purchase_rate: 0.7,
            satisfaction_rounds: 3,
            action_weights,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct StubProvider {
    pub profile: StubProfile,
    pub dim: usize,
}

impl StubProvider {
    pub fn new(profile: StubProfile) -> Self {
        StubProvider {
            profile,
            dim: DEFAULT_STUB_DIM,
        }
    }

    fn dim(&self) -> usize {
        if self.dim == 0 {
            DEFAULT_STUB_DIM
        } else {
            self.dim
        }
    }

    pub fn reply_text(&self, req: &ChatRequest) -> String {
        let text = req.visible_text();
        match template_of(req) {
            Some(marker::COMPRESS) => compress(req),
            Some(marker::RATE) => rate(&text),
            Some(marker::PERSONA) => persona_identity(&text),
            Some(marker::PREFERENCES) => preferences(&text),
            Some(marker::STAGE1) => self.stage1(&text),
            Some(marker::STAGE2) => self.stage2(&text),
            Some(marker::PLAN) => plan(&text),
            Some(marker::QUESTIONS) => questions(),
            Some(marker::INSIGHTS) => insights(&text),
            Some(marker::CHAT) => chat(&text),
            Some(marker::POST) => post(&text),
            Some(marker::LIVE) => live(&text),
            _ => "OK".to_string(),
        }
    }
}

impl Provider for StubProvider {
    fn kind(&self) -> BackendKind {
        BackendKind::Stub
    }

    fn complete(&self, req: &ChatRequest) -> Result<ChatReply, BackendError> {
        let reply = self.reply_text(req);
        let usage = TokenUsage::new(estimate_tokens(&req.visible_text()), estimate_tokens(&reply));
        Ok(ChatReply { text: reply, usage })
    }

    fn embed(&self, text: &str) -> Result<(Vec<f32>, TokenUsage), BackendError> {
        Ok((hash_embedding(text, self.dim()), TokenUsage::new(estimate_tokens(text), 0)))
    }
}

// ---------------------------------------------------------------------------
// helpers

fn after<'a>(text: &'a str, prefix: &str) -> Option<&'a str> {
    text.lines().find_map(|l| l.strip_prefix(prefix)).map(str::trim)
}

/// Lines following a header line up to the next non-bullet line.
fn bullets_after<'a>(text: &'a str, header: &str) -> Vec<&'a str> {
    let mut lines = text.lines().skip_while(|l| l.trim() != header);
    if lines.next().is_none() {
        return Vec::new();
    }
    lines
        .take_while(|l| l.starts_with("- "))
        .map(|l| &l[2..])
        .filter(|l| *l != "(none)")
        .collect()
}

/// Uniform draw in [0, 1) from the request text and a salt.
fn dice(text: &str, salt: u64) -> f64 {
    (mix64(hash_str(text) ^ salt) >> 11) as f64 / (1u64 << 53) as f64
}

fn quoted_after(line: &str, cue: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = line;
    while let Some(pos) = rest.find(cue) {
        rest = &rest[pos + cue.len()..];
        if let Some(stripped) = rest.strip_prefix('"') {
            if let Some(end) = stripped.find('"') {
                out.push(stripped[..end].to_string());
                rest = &stripped[end..];
            }
        }
    }
    out
}

fn quoted(line: &str) -> Vec<String> {
    line.split('"').skip(1).step_by(2).map(str::to_string).collect()
}

const POSITIVE: [&str; 5] = ["recommend", "love", "excellent", "great", "amazing"];
const NEGATIVE: [&str; 6] = ["avoid", "terrible", "awful", "disappointing", "broke", "warn"];

fn sentiment(line: &str) -> i32 {
    let l = line.to_lowercase();
    if NEGATIVE.iter().any(|w| l.contains(w)) {
        -1
    } else if POSITIVE.iter().any(|w| l.contains(w)) {
        1
    } else {
        0
    }
}

// ---------------------------------------------------------------------------
// memory templates

fn compress(req: &ChatRequest) -> String {
    let mut observation = String::new();
    let mut captions = Vec::new();
    for part in req.messages.iter().filter(|m| m.role == Role::User).flat_map(|m| &m.parts) {
        match part {
            Part::Text { text } => {
                if let Some(idx) = text.find(field::OBSERVATION) {
                    observation = text[idx + field::OBSERVATION.len()..].trim_start().to_string();
                }
            }
            Part::Image { caption, .. } => captions.push(caption.clone()),
        }
    }
    let cap: usize = req
        .visible_text()
        .split("at most ")
        .nth(1)
        .and_then(|s| s.split_whitespace().next()?.parse().ok())
        .unwrap_or(200);
    let mut summary = observation.lines().next().unwrap_or("").trim().to_string();
    if !captions.is_empty() {
        summary.push_str(" Images: ");
        summary.push_str(&captions.join("; "));
        summary.push('.');
    }
    if summary.chars().count() > cap {
        summary = summary.chars().take(cap).collect();
    }
    summary
}

const HIGH_IMPORTANCE: [&str; 10] = [
    "purchased", "bought", "recommend", "excellent", "avoid", "terrible", "warn", "live stream", "insight", "love",
];
const MEDIUM_IMPORTANCE: [&str; 7] = ["chatted", "posted", "viewed", "searched", "received", "plan", "history"];

fn rate(text: &str) -> String {
    let memory = after(text, field::MEMORY.trim_end()).unwrap_or("").to_lowercase();
    let score = if HIGH_IMPORTANCE.iter().any(|w| memory.contains(w)) {
        8
    } else if MEDIUM_IMPORTANCE.iter().any(|w| memory.contains(w)) {
        5
    } else {
        3
    };
    score.to_string()
}

// ---------------------------------------------------------------------------
// persona templates

const FIRST_NAMES: [&str; 20] = [
    "Ava", "Liam", "Mia", "Noah", "Zoe", "Ethan", "Iris", "Lucas", "Nora", "Omar", "Priya", "Kenji", "Sofia",
    "Mateo", "Hana", "Felix", "Leila", "Arjun", "Chloe", "Tomas",
];
const LAST_NAMES: [&str; 20] = [
    "Chen", "Garcia", "Smith", "Patel", "Kim", "Müller", "Rossi", "Nguyen", "Silva", "Okafor", "Cohen", "Ivanova",
    "Tanaka", "Dubois", "Haddad", "Larsen", "Moreno", "Singh", "Walsh", "Kowalski",
];
const GENDERS: [&str; 3] = ["female", "male", "nonbinary"];
/// (occupation, category keyword it leans toward)
const OCCUPATIONS: [(&str, &str); 20] = [
    ("software engineer", "phone"),
    ("teacher", "office"),
    ("chef", "grocery"),
    ("musician", "musical"),
    ("mechanic", "industrial"),
    ("graphic designer", "art"),
    ("gardener", "patio"),
    ("student", "video"),
    ("nurse", ""),
    ("accountant", "office"),
    ("sales manager", ""),
    ("journalist", ""),
    ("retiree", "patio"),
    ("photographer", "art"),
    ("lawyer", ""),
    ("electrician", "industrial"),
    ("barista", "grocery"),
    ("game developer", "video"),
    ("office manager", "office"),
    ("music teacher", "musical"),
];
/// (trait, category keyword, behavioural tendency)
const TRAITS: [(&str, &str, &str); 16] = [
    ("playful gamer", "video", "stays up late trying new games"),
    ("tech-savvy", "phone", "upgrades gadgets early"),
    ("foodie", "grocery", "tries new flavours every week"),
    ("musical", "musical", "practises an instrument daily"),
    ("creative", "art", "starts a new craft project often"),
    ("handy", "industrial", "fixes things around the house"),
    ("outdoorsy", "patio", "spends weekends in the garden"),
    ("organized", "office", "keeps a tidy workspace"),
    ("frugal", "", "compares prices before buying"),
    ("impulsive", "", "buys on impulse"),
    ("sociable", "", "shares purchases with friends"),
    ("cautious", "", "reads reviews carefully"),
    ("trendy", "", "follows what is popular"),
    ("curious", "", "browses many categories"),
    ("loyal", "", "sticks to familiar brands"),
    ("thoughtful", "", "buys gifts for others"),
];

fn persona_identity(text: &str) -> String {
    let seed: u64 = after(text, field::SEED.trim_end()).and_then(|s| s.parse().ok()).unwrap_or(0);
    let h = |salt: u64| mix64(seed ^ mix64(salt));
    let first = FIRST_NAMES[(h(1) % 20) as usize];
    let last = LAST_NAMES[(h(2) % 20) as usize];
    let gender = GENDERS[(h(3) % 3) as usize];
    let occupation = OCCUPATIONS[(h(4) % 20) as usize].0;
    let mut picks: Vec<usize> = Vec::new();
    let mut salt = 5;
    while picks.len() < 3 {
        let t = (h(salt) % TRAITS.len() as u64) as usize;
        if !picks.contains(&t) {
            picks.push(t);
        }
        salt += 1;
    }
    let traits: Vec<&str> = picks.iter().map(|&i| TRAITS[i].0).collect();
    format!(
        "NAME: {first} {last}\nGENDER: {gender}\nOCCUPATION: {occupation}\nTRAITS: {}",
        traits.join(", ")
    )
}

fn preferences(text: &str) -> String {
    let categories: Vec<&str> = after(text, field::CATEGORIES.trim_end())
        .map(|s| s.split("; ").filter(|c| !c.is_empty()).collect())
        .unwrap_or_default();
    let traits: Vec<String> = after(text, field::TRAITS.trim_end())
        .map(|s| s.split(", ").map(str::to_string).collect())
        .unwrap_or_default();
    let persona_line = after(text, field::PERSONA.trim_end()).unwrap_or("").to_lowercase();
    let occupation_kw = OCCUPATIONS
        .iter()
        .filter(|(o, _)| persona_line.contains(o))
        .max_by_key(|(o, _)| o.len())
        .map_or("", |(_, kw)| *kw);

    let mut weights: Vec<(String, f64)> = categories
        .iter()
        .map(|c| {
            let lc = c.to_lowercase();
            let mut w = 1.0 + 2.0 * dice(&persona_line, hash_str(&lc));
            for t in &traits {
                if let Some((_, kw, _)) = TRAITS.iter().find(|(name, _, _)| name == t) {
                    if !kw.is_empty() && lc.contains(kw) {
                        w += 4.0;
                    }
                }
            }
            if !occupation_kw.is_empty() && lc.contains(occupation_kw) {
                w += 3.0;
            }
            (c.to_string(), w)
        })
        .collect();
    let total: f64 = weights.iter().map(|(_, w)| w).sum();
    for (_, w) in &mut weights {
        *w /= total;
    }
    let mut out: Vec<String> = weights.iter().map(|(c, w)| format!("{c}: {w:.4}")).collect();
    let tendencies: Vec<&str> = traits
        .iter()
        .filter_map(|t| TRAITS.iter().find(|(name, _, _)| name == t).map(|(_, _, tend)| *tend))
        .collect();
    let tendencies = if tendencies.is_empty() {
        "browses casually".to_string()
    } else {
        tendencies.join("; ")
    };
    out.push(format!("{} {tendencies}", field::TENDENCIES));
    out.join("\n")
}

// ---------------------------------------------------------------------------
// decision templates

/// Preferred categories listed in a persona block, highest weight first.
fn preferred_categories(text: &str) -> Vec<String> {
    let Some(line) = after(text, field::PREFERRED.trim_end()) else {
        return Vec::new();
    };
    line.split(", ")
        .map(|c| c.split(" (").next().unwrap_or(c).trim().to_lowercase())
        .filter(|c| !c.is_empty())
        .collect()
}

fn dedup_in_order(v: &mut Vec<String>) {
    let mut seen = std::collections::BTreeSet::new();
    v.retain(|t| seen.insert(t.clone()));
}

fn round_of(memory_line: &str) -> Option<u32> {
    let rest = memory_line.strip_prefix("[round ")?;
    rest.split(']').next()?.trim().parse().ok()
}

fn strip_round(memory_line: &str) -> &str {
    match memory_line.find("] ") {
        Some(i) if memory_line.starts_with("[round ") => &memory_line[i + 2..],
        _ => memory_line,
    }
}

pub(crate) const NOT_LOOKING: &str = "not looking to buy anything right now";
pub(crate) const PASSING_TIME: &str = "just passing time";

impl StubProvider {
    fn stage1(&self, text: &str) -> String {
        let name = text
            .lines()
            .next()
            .and_then(|l| l.split(" as ").nth(1))
            .and_then(|l| l.split(" in two").next())
            .unwrap_or("someone");
        let round: u32 = after(text, field::ROUND.trim_end()).and_then(|s| s.parse().ok()).unwrap_or(0);
        let last = after(text, field::LAST_OBSERVATION.trim_end()).unwrap_or("");
        let memories = bullets_after(text, field::MEMORIES);
        let prefs = preferred_categories(text);

        let recent_purchase = last.starts_with(headline::PURCHASED)
            || memories.iter().any(|m| {
                strip_round(m).starts_with(headline::PURCHASED)
                    && round_of(m).is_some_and(|r| round.saturating_sub(r) < self.profile.satisfaction_rounds)
            });

        let mut recommended: Vec<String> = Vec::new();
        let mut avoided: Vec<String> = Vec::new();
        // Messages inside one memory are separated by " | "; judge each alone.
        for segment in memories.iter().flat_map(|m| strip_round(m).split(" | ")) {
            let titles = quoted(segment);
            match sentiment(segment) {
                1 => recommended.extend(titles),
                -1 => avoided.extend(titles),
                _ => {}
            }
        }
        recommended.retain(|t| !avoided.contains(t));
        dedup_in_order(&mut recommended);
        dedup_in_order(&mut avoided);

        let mut p1 = format!("I am {name}. ");
        if recent_purchase {
            p1.push_str(&format!("I made a purchase recently, so I am {NOT_LOOKING}."));
        } else if let Some(title) = last.strip_prefix(headline::VIEWED) {
            let title = title.split(" (").next().unwrap_or(title).trim_end_matches('.');
            p1.push_str(&format!("I am seriously considering \"{title}\"."));
        } else if last.starts_with(headline::ENTER_SHOPPING)
            || last.starts_with(headline::HISTORY)
            || dice(text, 0x1A7E) < self.profile.intent_rate
        {
            match prefs.as_slice() {
                [] => p1.push_str("I want to find something useful for myself."),
                [one] => p1.push_str(&format!("I want to find {one} products that suit me.")),
                [a, b, ..] => p1.push_str(&format!("I want to find {a} or {b} products that suit me.")),
            }
        } else {
            p1.push_str(&format!("I am {PASSING_TIME} and not looking for anything specific."));
        }
        for t in &recommended {
            p1.push_str(&format!(" Friends recommend \"{t}\"."));
        }
        for t in &avoided {
            p1.push_str(&format!(" I should avoid \"{t}\"."));
        }
        p1
    }

    fn stage2(&self, text: &str) -> String {
        let env = ParsedEnv::parse(text);
        let thoughts = env.thoughts.to_lowercase();
        let recommended = quoted_after(&env.thoughts, "recommend ");
        let avoided = quoted_after(&env.thoughts, "avoid ");
        let considering = quoted_after(&env.thoughts, "considering ");
        let intent = !thoughts.contains(NOT_LOOKING) && !thoughts.contains(PASSING_TIME);

        let score = |p: &ParsedProduct| -> i64 {
            let mut s = 0i64;
            if intent {
                if let Some(pos) = thoughts.find(&p.category.to_lowercase()) {
                    // earlier mention = stronger preference
                    s += 1000 - pos.min(999) as i64;
                }
            }
            if (intent && recommended.contains(&p.title)) || considering.contains(&p.title) {
                s += 10_000;
            }
            if avoided.contains(&p.title) {
                s -= 100_000;
            }
            s
        };
        let mut ranked: Vec<(&ParsedProduct, i64, u64)> = env
            .products
            .iter()
            .map(|p| (p, score(p), mix64(hash_str(text) ^ hash_str(&p.id))))
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));

        if env.select_count > 0 {
            let ids: Vec<&str> = ranked.iter().take(env.select_count).map(|(p, _, _)| p.id.as_str()).collect();
            return format!("{} purchase\n{} {}", field::ACTION, field::TARGET, ids.join(", "));
        }

        let legal = |a: &str| env.legal.iter().any(|l| l == a);
        if let Some((best, s, _)) = ranked.first() {
            if *s > 0 {
                if best.viewed && legal("purchase") {
                    let wants = recommended.contains(&best.title) || dice(text, 0xB0B) < self.profile.purchase_rate;
                    if wants {
                        return format!("{} purchase\n{} {}", field::ACTION, field::TARGET, best.id);
                    }
                } else if !best.viewed && legal("view_details") {
                    return format!("{} view_details\n{} {}", field::ACTION, field::TARGET, best.id);
                }
            }
        }

        // Free action, weighted.
        let feasible: Vec<(&str, f64)> = self
            .profile
            .action_weights
            .iter()
            .filter(|(a, w)| **w > 0.0 && legal(a))
            .filter(|(a, _)| match a.as_str() {
                "chat" => !env.friends.is_empty(),
                "live_stream" => !env.products.is_empty(),
                _ => true,
            })
            .map(|(a, w)| (a.as_str(), *w))
            .collect();
        let Some(action) = weighted_pick(&feasible, dice(text, 0xAC7)) else {
            return format!("{} idle\n{} none", field::ACTION, field::TARGET);
        };
        let target = match action {
            "chat" => {
                let i = (mix64(hash_str(text) ^ 0xC4A7) % env.friends.len() as u64) as usize;
                env.friends[i].clone()
            }
            "search" => preferred_from_thoughts(&thoughts, &env.products).unwrap_or_else(|| "bestseller".to_string()),
            "live_stream" => ranked.first().map(|(p, _, _)| p.id.clone()).unwrap_or_default(),
            _ => "none".to_string(),
        };
        format!("{} {action}\n{} {target}", field::ACTION, field::TARGET)
    }
}

fn preferred_from_thoughts(thoughts: &str, products: &[ParsedProduct]) -> Option<String> {
    let find = thoughts.find("find ")?;
    let rest = &thoughts[find + 5..];
    let phrase = rest.split(" or ").next()?.split(" products").next()?.trim();
    if phrase.is_empty() {
        return products.first().map(|p| p.category.to_lowercase());
    }
    Some(phrase.to_string())
}

fn weighted_pick<'a>(items: &[(&'a str, f64)], u: f64) -> Option<&'a str> {
    let total: f64 = items.iter().map(|(_, w)| w).sum();
    if total <= 0.0 {
        return None;
    }
    let mut acc = 0.0;
    let target = u * total;
    for (a, w) in items {
        acc += w;
        if target < acc {
            return Some(a);
        }
    }
    items.last().map(|(a, _)| *a)
}

#[derive(Debug, Default)]
struct ParsedProduct {
    id: String,
    title: String,
    category: String,
    viewed: bool,
}

#[derive(Debug, Default)]
struct ParsedEnv {
    thoughts: String,
    legal: Vec<String>,
    select_count: usize,
    products: Vec<ParsedProduct>,
    friends: Vec<String>,
}

impl ParsedEnv {
    fn parse(text: &str) -> Self {
        let mut env = ParsedEnv {
            thoughts: after(text, field::THOUGHTS.trim_end()).unwrap_or("").to_string(),
            legal: after(text, field::LEGAL.trim_end())
                .map(|s| s.split(", ").map(str::to_string).collect())
                .unwrap_or_default(),
            select_count: after(text, field::SELECT.trim_end())
                .and_then(|s| s.split_whitespace().next()?.parse().ok())
                .unwrap_or(0),
            ..Default::default()
        };
        let mut section = "";
        for line in text.lines() {
            if line == field::PRODUCTS || line == field::FRIENDS {
                section = if line == field::PRODUCTS { "p" } else { "f" };
                continue;
            }
            let Some(rest) = line.strip_prefix("- [") else {
                if !line.starts_with("- ") && !line.is_empty() && section == "f" {
                    section = "";
                }
                continue;
            };
            let Some((id, tail)) = rest.split_once("] ") else { continue };
            match section {
                "p" => {
                    let cols: Vec<&str> = tail.split(" | ").collect();
                    env.products.push(ParsedProduct {
                        id: id.to_string(),
                        title: cols.first().unwrap_or(&"").to_string(),
                        category: cols.get(1).unwrap_or(&"").to_string(),
                        viewed: cols.iter().any(|c| *c == field::DETAILS_VIEWED),
                    });
                }
                "f" => env.friends.push(id.to_string()),
                _ => {}
            }
        }
        env
    }
}

// ---------------------------------------------------------------------------
// planning, reflection and social templates

fn plan(text: &str) -> String {
    let prefs = preferred_categories(text);
    let first = prefs.first().cloned().unwrap_or_else(|| "useful".to_string());
    format!(
        "{} Look for good {first} products and compare a few before buying.\n\
         {} Keep in touch with friends and hear what they recommend.",
        field::GOAL,
        field::GOAL
    )
}

fn questions() -> String {
    "What kinds of products do I keep coming back to?\nWhat are my friends telling me about what to buy?".to_string()
}

fn insights(text: &str) -> String {
    let memories = bullets_after(text, field::MEMORIES);
    let first = memories.first().map_or("nothing in particular", |m| strip_round(m));
    let short: String = first.chars().take(80).collect();
    let social = memories
        .iter()
        .filter(|m| sentiment(m) != 0)
        .count();
    format!(
        "{} My recent experiences centre on: {short}\n{} {} of my recent memories carry opinions from other people.",
        field::INSIGHT,
        field::INSIGHT,
        social
    )
}

fn chat(text: &str) -> String {
    let friend = after(text, field::FRIEND_NAME.trim_end()).unwrap_or("friend");
    let context = after(text, field::CONTEXT.trim_end()).unwrap_or("");
    let short: String = context.chars().take(100).collect();
    format!("Hi {friend}, catching up: {short}")
}

fn post(text: &str) -> String {
    match after(text, field::RECENT_PURCHASE.trim_end()) {
        Some(title) if title != "none" => format!("I just bought \"{title}\" and I love it, I recommend it!"),
        _ => {
            let context = after(text, field::CONTEXT.trim_end()).unwrap_or("");
            let short: String = context.chars().take(100).collect();
            format!("Sharing a moment from my day: {short}")
        }
    }
}

fn live(text: &str) -> String {
    let title = after(text, field::PRODUCT.trim_end()).unwrap_or("this product");
    format!("Check out \"{title}\", it is excellent and I highly recommend it! Grab one while you can.")
}
