use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// External actions an agent can take in one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionType {
    Browse,
    Search,
    Page,
    ViewDetails,
    Purchase,
    Chat,
    Post,
    LiveStream,
    EnterShopping,
    EnterSocial,
    Idle,
}

impl ActionType {
    pub const ALL: [ActionType; 11] = [
        ActionType::Browse,
        ActionType::Search,
        ActionType::Page,
        ActionType::ViewDetails,
        ActionType::Purchase,
        ActionType::Chat,
        ActionType::Post,
        ActionType::LiveStream,
        ActionType::EnterShopping,
        ActionType::EnterSocial,
        ActionType::Idle,
    ];

    /// Actions served from the memory bank without backend calls.
    pub const BASIC: [ActionType; 4] = [
        ActionType::EnterShopping,
        ActionType::EnterSocial,
        ActionType::Page,
        ActionType::Idle,
    ];

    pub fn is_basic(self) -> bool {
        Self::BASIC.contains(&self)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ActionType::Browse => "browse",
            ActionType::Search => "search",
            ActionType::Page => "page",
            ActionType::ViewDetails => "view_details",
            ActionType::Purchase => "purchase",
            ActionType::Chat => "chat",
            ActionType::Post => "post",
            ActionType::LiveStream => "live_stream",
            ActionType::EnterShopping => "enter_shopping",
            ActionType::EnterSocial => "enter_social",
            ActionType::Idle => "idle",
        }
    }

    /// Kind of target the action requires.
    pub fn target_kind(self) -> TargetKind {
        match self {
            ActionType::ViewDetails | ActionType::Purchase | ActionType::LiveStream => TargetKind::Product,
            ActionType::Search => TargetKind::Query,
            ActionType::Chat => TargetKind::Friend,
            _ => TargetKind::None,
        }
    }
}

impl fmt::Display for ActionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ActionType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        ActionType::ALL
            .into_iter()
            .find(|a| a.as_str() == norm)
            .ok_or_else(|| Error::Validation(format!("unknown action {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    None,
    Product,
    Friend,
    Query,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Target {
    Friend(u32),
    /// One product for browsing actions; several for selection decisions.
    Products(Vec<String>),
    Query(String),
    Text(String),
}

/// Selected action plus the stage-1 summary that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionDecision {
    pub action: ActionType,
    pub target: Option<Target>,
    pub rationale: String,
    /// True when the backend's reply was illegal twice and idle was forced.
    #[serde(default)]
    pub fallback: bool,
}

impl ActionDecision {
    pub fn idle(rationale: impl Into<String>) -> Self {
        ActionDecision {
            action: ActionType::Idle,
            target: None,
            rationale: rationale.into(),
            fallback: false,
        }
    }

    pub fn product_ids(&self) -> &[String] {
        match &self.target {
            Some(Target::Products(ids)) => ids,
            _ => &[],
        }
    }
}
