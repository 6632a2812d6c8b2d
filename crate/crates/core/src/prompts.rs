//! Prompt templates.
//!
//! Every template starts with a fixed marker phrase on its first line. The
//! stub provider dispatches on those markers, so changing one here changes
//! the stub's behaviour too. Bump [`TEMPLATE_VERSION`] whenever the wording
//! changes; it is recorded in run logs.

use crate::backend::{ChatRequest, Message, Part, Role};

pub const TEMPLATE_VERSION: u32 = 1;

pub mod marker {
    pub const COMPRESS: &str = "Compress the following observation";
    pub const RATE: &str = "rate the importance";
    pub const PERSONA: &str = "Create a new shopper persona";
    pub const PREFERENCES: &str = "Infer purchasing preferences";
    pub const STAGE1: &str = "Summarize your current intent";
    pub const STAGE2: &str = "Choose your next action";
    pub const PLAN: &str = "Write a short plan";
    pub const QUESTIONS: &str = "most salient questions";
    pub const INSIGHTS: &str = "high-level insights";
    pub const CHAT: &str = "Write a chat message";
    pub const POST: &str = "Write a social media post";
    pub const LIVE: &str = "Write a live stream pitch";

    pub const ALL: [&str; 12] = [
        STAGE2, STAGE1, INSIGHTS, QUESTIONS, PLAN, COMPRESS, RATE, PERSONA, PREFERENCES, CHAT, POST, LIVE,
    ];
}

/// Line prefixes shared between templates and reply parsers.
pub mod field {
    pub const OBSERVATION: &str = "Observation:";
    pub const MEMORY: &str = "Memory: ";
    pub const SEED: &str = "Persona seed: ";
    pub const CATEGORIES: &str = "Categories: ";
    pub const PERSONA: &str = "Persona: ";
    pub const TRAITS: &str = "Traits: ";
    pub const PREFERRED: &str = "Preferred categories: ";
    pub const LAST_OBSERVATION: &str = "Last observation: ";
    pub const ROUND: &str = "Current round: ";
    pub const MEMORIES: &str = "Relevant memories:";
    pub const THOUGHTS: &str = "Your current thoughts: ";
    pub const LOCATION: &str = "Location: ";
    pub const LEGAL: &str = "Legal actions: ";
    pub const SELECT: &str = "Select exactly ";
    pub const PRODUCTS: &str = "Visible products:";
    pub const FRIENDS: &str = "Friends:";
    pub const ACTION: &str = "ACTION:";
    pub const TARGET: &str = "TARGET:";
    pub const GOAL: &str = "GOAL:";
    pub const INSIGHT: &str = "INSIGHT:";
    pub const TENDENCIES: &str = "TENDENCIES:";
    pub const FRIEND_NAME: &str = "Friend: ";
    pub const CONTEXT: &str = "Context: ";
    pub const PRODUCT: &str = "Product: ";
    pub const RECENT_PURCHASE: &str = "Recent purchase: ";
    pub const DETAILS_VIEWED: &str = "details viewed";
}

/// Opening words of observation texts produced by the sandbox. The stub reads
/// them back to infer what the agent just did.
pub mod headline {
    pub const ENTER_SHOPPING: &str = "Entered the shopping system";
    pub const ENTER_SOCIAL: &str = "Entered the social medium";
    pub const IDLE: &str = "Stayed idle";
    pub const PAGE: &str = "Paged to more recommendations";
    pub const BROWSE: &str = "Browsed the recommendations";
    pub const SEARCH: &str = "Searched for";
    pub const VIEWED: &str = "Viewed details of ";
    pub const PURCHASED: &str = "Purchased ";
    pub const CHATTED: &str = "Chatted with";
    pub const POSTED: &str = "Posted to friends";
    pub const STREAMED: &str = "Hosted a live stream";
    pub const RECEIVED: &str = "Received messages";
    pub const HISTORY: &str = "Purchase history includes";
    pub const PLAN: &str = "Plan";
    pub const INSIGHT: &str = "Insight";
}

const SYSTEM: &str = "You are role-playing a consumer who lives in an online society with a shopping \
system and a social medium. Stay in character and answer exactly in the requested format.";

fn request(user_parts: Vec<Part>, max_output_tokens: u32) -> ChatRequest {
    let mut req = ChatRequest::new(vec![
        Message::text(Role::System, SYSTEM),
        Message {
            role: Role::User,
            parts: user_parts,
        },
    ]);
    req.max_output_tokens = max_output_tokens;
    req
}

fn text(s: impl Into<String>) -> Part {
    Part::Text { text: s.into() }
}

fn bullet_list(items: &[String]) -> String {
    if items.is_empty() {
        return "- (none)".to_string();
    }
    items.iter().map(|m| format!("- {m}")).collect::<Vec<_>>().join("\n")
}

/// An image carried alongside text, as a reference plus caption.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ImageRef {
    pub reference: String,
    pub caption: String,
}

pub fn compress(observation: &str, images: &[ImageRef], cap: usize) -> ChatRequest {
    let mut parts = vec![text(format!(
        "{} into one concise, informative sentence of at most {cap} characters.\n\
         Keep product names and who did what; drop boilerplate and descriptions.\n{}\n{observation}",
        marker::COMPRESS,
        field::OBSERVATION
    ))];
    parts.extend(images.iter().map(|im| Part::Image {
        reference: im.reference.clone(),
        caption: im.caption.clone(),
    }));
    request(parts, 96)
}

pub fn rate(summary: &str) -> ChatRequest {
    request(
        vec![text(format!(
            "On a scale of 1 to 10, {} of the memory below, where 1 is purely mundane \
             (entering a shop, idling) and 10 is extremely poignant. Reply with a single integer.\n{}{summary}",
            marker::RATE,
            field::MEMORY
        ))],
        4,
    )
}

pub fn persona_identity(seed: u64) -> ChatRequest {
    request(
        vec![text(format!(
            "{} for an e-commerce simulation.\n{}{seed}\n\
             Reply with four lines:\nNAME: <full name>\nGENDER: <female|male|nonbinary>\n\
             OCCUPATION: <occupation>\nTRAITS: <three comma-separated personality traits>",
            marker::PERSONA,
            field::SEED
        ))],
        64,
    )
}

pub fn persona_preferences(
    name: &str,
    age: u32,
    gender: &str,
    occupation: &str,
    traits: &[String],
    categories: &[String],
) -> ChatRequest {
    request(
        vec![text(format!(
            "{} for the persona below over the listed product categories.\n\
             {}{}\n{}{name}, {age}-year-old {gender} {occupation}.\n{}{}\n\
             Reply with one line per category as `<category>: <weight between 0 and 1>`, then one line \
             `{} <two or three behavioural tendencies separated by semicolons>`.",
            marker::PREFERENCES,
            field::CATEGORIES,
            categories.join("; "),
            field::PERSONA,
            field::TRAITS,
            traits.join(", "),
            field::TENDENCIES
        ))],
        128,
    )
}

/// `memories` are pre-rendered lines, conventionally `[round r] summary`.
pub fn stage1(name: &str, persona_block: &str, round: u32, last_observation: &str, memories: &[String]) -> ChatRequest {
    request(
        vec![text(format!(
            "{} as {name} in two or three first-person sentences, based only on who you are and \
             what just happened. Do not pick a product yet.\n{persona_block}\n{}{round}\n{}{last_observation}\n{}\n{}",
            marker::STAGE1,
            field::ROUND,
            field::LAST_OBSERVATION,
            field::MEMORIES,
            bullet_list(memories)
        ))],
        96,
    )
}

/// One product line of the stage-2 environment listing.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductLine {
    pub product_id: String,
    pub title: String,
    pub category: String,
    pub price: f64,
    pub sales: u64,
    pub details_viewed: bool,
    pub image: Option<ImageRef>,
}

pub struct Stage2<'a> {
    pub name: &'a str,
    pub thoughts: &'a str,
    pub location: &'a str,
    pub legal_actions: &'a [&'a str],
    pub select_count: usize,
    pub products: &'a [ProductLine],
    pub friends: &'a [(u32, String)],
}

pub fn stage2(s: &Stage2<'_>) -> ChatRequest {
    let mut head = format!(
        "{} as {}.\n{}{}\n{}{}\n{}{}\n",
        marker::STAGE2,
        s.name,
        field::THOUGHTS,
        s.thoughts.replace('\n', " "),
        field::LOCATION,
        s.location,
        field::LEGAL,
        s.legal_actions.join(", ")
    );
    if s.select_count > 0 {
        head.push_str(&format!(
            "{}{} product(s) from the visible products, as comma-separated ids.\n",
            field::SELECT,
            s.select_count
        ));
    }
    head.push_str(field::PRODUCTS);
    let mut parts = vec![text(head)];
    if s.products.is_empty() {
        parts.push(text("- (none)"));
    }
    for p in s.products {
        let mut line = format!(
            "- [{}] {} | {} | ${:.2} | sold {}",
            p.product_id, p.title, p.category, p.price, p.sales
        );
        if p.details_viewed {
            line.push_str(" | ");
            line.push_str(field::DETAILS_VIEWED);
        }
        parts.push(text(line));
        if let Some(im) = &p.image {
            parts.push(Part::Image {
                reference: im.reference.clone(),
                caption: im.caption.clone(),
            });
        }
    }
    let friends: Vec<String> = s.friends.iter().map(|(id, name)| format!("[{id}] {name}")).collect();
    parts.push(text(format!(
        "{}\n{}\nReply with exactly two lines:\n{} <one of the legal actions>\n\
         {} <product id(s) separated by commas, a friend id, a search query, or none>",
        field::FRIENDS,
        bullet_list(&friends),
        field::ACTION,
        field::TARGET
    )));
    request(parts, 32)
}

pub fn stage2_retry(original: &ChatRequest, previous_reply: &str, reason: &str) -> ChatRequest {
    let mut req = original.clone();
    req.messages.push(Message::text(Role::Assistant, previous_reply));
    req.messages.push(Message::text(
        Role::User,
        format!(
            "That reply was not valid: {reason}. Answer again with the {} and {} lines, using only \
             the legal actions and the ids shown.",
            field::ACTION,
            field::TARGET
        ),
    ));
    req
}

pub fn plan(name: &str, persona_block: &str, memories: &[String], horizon: u32) -> ChatRequest {
    request(
        vec![text(format!(
            "{} for the next {horizon} rounds as {name}: two or three concrete goals, one per line \
             starting with `{}`.\n{persona_block}\n{}\n{}",
            marker::PLAN,
            field::GOAL,
            field::MEMORIES,
            bullet_list(memories)
        ))],
        96,
    )
}

pub fn reflection_questions(name: &str, memories: &[String]) -> ChatRequest {
    request(
        vec![text(format!(
            "Given only the recent memories of {name} below, what are the 2 {} you can answer \
             about yourself? One question per line.\n{}\n{}",
            marker::QUESTIONS,
            field::MEMORIES,
            bullet_list(memories)
        ))],
        64,
    )
}

pub fn reflection_insights(name: &str, questions: &[String], memories: &[String]) -> ChatRequest {
    request(
        vec![text(format!(
            "Answer the questions of {name} using the memories, then state 2 {}, one per line \
             starting with `{}`.\nQuestions:\n{}\n{}\n{}",
            marker::INSIGHTS,
            field::INSIGHT,
            bullet_list(questions),
            field::MEMORIES,
            bullet_list(memories)
        ))],
        96,
    )
}

pub fn chat_message(name: &str, friend: &str, context: &str) -> ChatRequest {
    request(
        vec![text(format!(
            "{} from {name} to a friend, one or two sentences.\n{}{friend}\n{}{context}",
            marker::CHAT,
            field::FRIEND_NAME,
            field::CONTEXT
        ))],
        64,
    )
}

pub fn post_message(name: &str, context: &str, recent_purchase: Option<&str>) -> ChatRequest {
    request(
        vec![text(format!(
            "{} from {name} to all friends, one or two sentences.\n{}{context}\n{}{}",
            marker::POST,
            field::CONTEXT,
            field::RECENT_PURCHASE,
            recent_purchase.unwrap_or("none")
        ))],
        64,
    )
}

pub fn live_pitch(name: &str, title: &str, description: &str, image: Option<&ImageRef>) -> ChatRequest {
    let mut parts = vec![text(format!(
        "{} as {name}, a popular streamer, introducing one product in two sentences.\n{}{title}\n{description}",
        marker::LIVE,
        field::PRODUCT
    ))];
    if let Some(im) = image {
        parts.push(Part::Image {
            reference: im.reference.clone(),
            caption: im.caption.clone(),
        });
    }
    request(parts, 64)
}

/// Which template a request was built from, judged by its first user line.
pub fn template_of(req: &ChatRequest) -> Option<&'static str> {
    let first_user = req.messages.iter().find(|m| m.role == Role::User)?;
    let first_line = match first_user.parts.first()? {
        Part::Text { text } => text.lines().next().unwrap_or(""),
        Part::Image { .. } => return None,
    };
    marker::ALL.iter().copied().find(|m| first_line.contains(m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_template_is_recognised() {
        let reqs = [
            (compress("x", &[], 100), marker::COMPRESS),
            (rate("x"), marker::RATE),
            (persona_identity(1), marker::PERSONA),
            (persona_preferences("a", 30, "female", "chef", &[], &[]), marker::PREFERENCES),
            (stage1("a", "p", 1, "o", &[]), marker::STAGE1),
            (plan("a", "p", &[], 3), marker::PLAN),
            (reflection_questions("a", &[]), marker::QUESTIONS),
            (reflection_insights("a", &[], &[]), marker::INSIGHTS),
            (chat_message("a", "b", "c"), marker::CHAT),
            (post_message("a", "c", None), marker::POST),
            (live_pitch("a", "t", "d", None), marker::LIVE),
        ];
        for (req, m) in reqs {
            assert_eq!(template_of(&req), Some(m));
            assert!(req.validate().is_ok());
        }
    }

    #[test]
    fn markers_do_not_contain_each_other() {
        for a in marker::ALL {
            for b in marker::ALL {
                if a != b {
                    assert!(!a.contains(b), "{a} contains {b}");
                }
            }
        }
    }
}
