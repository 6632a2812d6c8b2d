//! Chat and embedding providers behind one metered front door.
//!
//! [`Backend`] owns a [`TokenMeter`] and a boxed [`Provider`]. Every call is
//! validated, forwarded, and its usage recorded under the caller's
//! [`Category`]. Three providers ship: [`RemoteProvider`] (OpenAI-compatible
//! wire client), [`StubProvider`] (deterministic keyword rules) and
//! [`OracleProvider`] (scripted selection policies for evaluation).

pub(crate) mod embedding;
mod meter;
mod oracle;
mod remote;
mod stub;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use embedding::{cosine, hash_embedding, normalize, Embedding, DEFAULT_STUB_DIM};
pub use meter::{CallKind, CallRecord, Category, MeterSnapshot, TokenMeter, TokenUsage};
pub use oracle::{OracleProvider, Policy};
pub use remote::{RemoteConfig, RemoteProvider, RetryPolicy};
pub use stub::{estimate_tokens, StubProfile, StubProvider};

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum BackendError {
    /// Transport failure or retryable status that outlived the retry budget.
    #[error("backend unavailable after {attempts} attempt(s): {message}")]
    Transient { attempts: u32, message: String },
    #[error("backend protocol error: {0}")]
    Protocol(String),
    #[error("backend rejected request with HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("oracle: {0}")]
    Oracle(String),
}

impl BackendError {
    pub fn is_retriable(&self) -> bool {
        matches!(self, BackendError::Transient { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Part {
    Text { text: String },
    /// Opaque image reference with a caption; providers that cannot see
    /// pixels read the caption.
    Image { reference: String, caption: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub parts: Vec<Part>,
}

impl Message {
    pub fn text(role: Role, text: impl Into<String>) -> Self {
        Message {
            role,
            parts: vec![Part::Text { text: text.into() }],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub messages: Vec<Message>,
    pub max_output_tokens: u32,
    pub temperature: f64,
}

impl ChatRequest {
    pub fn new(messages: Vec<Message>) -> Self {
        ChatRequest {
            messages,
            max_output_tokens: 256,
            temperature: 0.7,
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.messages.is_empty() {
            return Err(BackendError::InvalidRequest("request has no messages".into()));
        }
        if self.messages.iter().skip(1).any(|m| m.role == Role::System) {
            return Err(BackendError::InvalidRequest("system message must come first".into()));
        }
        if self.messages.iter().any(|m| m.parts.is_empty()) {
            return Err(BackendError::InvalidRequest("message without parts".into()));
        }
        Ok(())
    }

    pub fn has_images(&self) -> bool {
        self.messages
            .iter()
            .flat_map(|m| &m.parts)
            .any(|p| matches!(p, Part::Image { .. }))
    }

    /// Everything a caption-reading provider sees: text parts and image
    /// captions, newline separated.
    pub fn visible_text(&self) -> String {
        let mut out = String::new();
        for part in self.messages.iter().flat_map(|m| &m.parts) {
            if !out.is_empty() {
                out.push('\n');
            }
            match part {
                Part::Text { text } => out.push_str(text),
                Part::Image { caption, .. } => out.push_str(caption),
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatReply {
    pub text: String,
    pub usage: TokenUsage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Remote,
    Stub,
    Oracle,
}

/// A candidate the oracle may select.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub product_id: String,
    /// Purchase count shown next to the product.
    pub sales: u64,
}

/// Structured view of a selection decision, offered to scripted providers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionContext {
    /// Stable key of the decision (agent, round, list); seeds random policies.
    pub key: u64,
    pub candidates: Vec<Candidate>,
    pub select_count: usize,
    /// Hidden ground truth, present only in evaluation mode.
    pub ground_truth: Option<Vec<String>>,
}

pub trait Provider: Send + Sync {
    fn kind(&self) -> BackendKind;

    fn complete(&self, req: &ChatRequest) -> Result<ChatReply, BackendError>;

    /// Returns a raw (not necessarily normalised) embedding and its usage.
    fn embed(&self, text: &str) -> Result<(Vec<f32>, TokenUsage), BackendError>;

    /// Scripted providers answer selection decisions directly; prompt-driven
    /// providers return `None`.
    fn select(&self, _ctx: &SelectionContext) -> Option<Result<Vec<String>, BackendError>> {
        None
    }
}

/// Metered handle to a provider. Cheap to clone.
#[derive(Clone)]
pub struct Backend {
    provider: Arc<dyn Provider>,
    meter: Arc<TokenMeter>,
}

impl std::fmt::Debug for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Backend").field("kind", &self.provider.kind()).finish()
    }
}

impl Backend {
    pub fn new(provider: impl Provider + 'static) -> Self {
        Backend {
            provider: Arc::new(provider),
            meter: Arc::new(TokenMeter::default()),
        }
    }

    pub fn stub() -> Self {
        Backend::new(StubProvider::default())
    }

    pub fn kind(&self) -> BackendKind {
        self.provider.kind()
    }

    pub fn meter(&self) -> &TokenMeter {
        &self.meter
    }

    pub fn chat(&self, req: &ChatRequest, category: Category) -> Result<ChatReply, BackendError> {
        req.validate()?;
        let reply = self.provider.complete(req)?;
        self.meter.record(category, CallKind::Chat, reply.usage);
        Ok(reply)
    }

    pub fn embed(&self, text: &str, category: Category) -> Result<Embedding, BackendError> {
        if text.trim().is_empty() {
            return Err(BackendError::InvalidRequest("cannot embed empty text".into()));
        }
        let (raw, usage) = self.provider.embed(text)?;
        self.meter.record(category, CallKind::Embed, usage);
        Embedding::from_raw(raw).ok_or_else(|| BackendError::Protocol("embedding has zero norm".into()))
    }

    pub fn select(&self, ctx: &SelectionContext) -> Option<Result<Vec<String>, BackendError>> {
        self.provider.select(ctx)
    }
}
