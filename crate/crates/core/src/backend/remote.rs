//! OpenAI-compatible wire client.
//!
//! Speaks `POST {endpoint}/chat/completions` and `POST {endpoint}/embeddings`
//! with the public field names. Transport errors, 408, 429 and 5xx are retried
//! with exponential backoff; each request carries an `X-Request-Id` derived
//! from its body so retried payloads can be deduplicated server side.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{BackendError, BackendKind, ChatReply, ChatRequest, Part, Provider, TokenUsage};
use crate::rng::fnv1a;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    pub max_retries: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay_ms: 500,
            max_delay_ms: 8000,
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (1-based).
    pub fn delay(&self, retry: u32) -> Duration {
        let factor = 1u64.checked_shl(retry.saturating_sub(1)).unwrap_or(u64::MAX);
        Duration::from_millis(self.base_delay_ms.saturating_mul(factor).min(self.max_delay_ms))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    /// Base URL, e.g. `https://api.openai.com/v1`.
    pub endpoint: String,
    pub chat_model: String,
    pub embedding_model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub max_in_flight: usize,
    pub timeout_secs: u64,
    /// Send image parts as `image_url`; when false, captions are sent as text.
    pub send_images: bool,
    pub retry: RetryPolicy,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            endpoint: "https://api.openai.com/v1".into(),
            chat_model: "gpt-4-1106-preview".into(),
            embedding_model: "text-embedding-ada-002".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            max_in_flight: 8,
            timeout_secs: 60,
            send_images: true,
            retry: RetryPolicy::default(),
        }
    }
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn new(n: usize) -> Self {
        Gate {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

pub struct RemoteProvider {
    config: RemoteConfig,
    api_key: Option<String>,
    agent: ureq::Agent,
    gate: Gate,
}

impl std::fmt::Debug for RemoteProvider {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteProvider")
            .field("endpoint", &self.config.endpoint)
            .field("chat_model", &self.config.chat_model)
            .finish()
    }
}

impl RemoteProvider {
    /// Reads the API key from the configured environment variable, if set.
    pub fn new(config: RemoteConfig) -> Self {
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        Self::with_key(config, api_key)
    }

    pub fn with_key(config: RemoteConfig, api_key: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs.max(1))))
            .http_status_as_error(false)
            .build()
            .into();
        let gate = Gate::new(config.max_in_flight);
        RemoteProvider {
            config,
            api_key,
            agent,
            gate,
        }
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn url(&self, path: &str) -> String {
        format!("{}/{path}", self.config.endpoint.trim_end_matches('/'))
    }

    /// POSTs `body`, retrying transient failures. Returns the parsed JSON.
    fn post(&self, path: &str, body: &Value) -> Result<Value, BackendError> {
        let payload = serde_json::to_string(body).map_err(|e| BackendError::Protocol(e.to_string()))?;
        let request_id = format!("{:016x}", fnv1a(payload.as_bytes()));
        let url = self.url(path);
        let mut last = String::new();
        let attempts = self.config.retry.max_retries + 1;
        for attempt in 1..=attempts {
            if attempt > 1 {
                std::thread::sleep(self.config.retry.delay(attempt - 1));
            }
            let _permit = self.gate.acquire();
            let mut req = self
                .agent
                .post(&url)
                .header("Content-Type", "application/json")
                .header("X-Request-Id", &request_id);
            if let Some(key) = &self.api_key {
                req = req.header("Authorization", &format!("Bearer {key}"));
            }
            let mut resp = match req.send(payload.as_bytes()) {
                Ok(r) => r,
                Err(e) => {
                    tracing::warn!(attempt, error = %e, "backend transport error");
                    last = e.to_string();
                    continue;
                }
            };
            let status = resp.status().as_u16();
            let text = match resp.body_mut().read_to_string() {
                Ok(t) => t,
                Err(e) => {
                    last = e.to_string();
                    continue;
                }
            };
            match status {
                200..=299 => {
                    return serde_json::from_str(&text)
                        .map_err(|e| BackendError::Protocol(format!("response is not JSON: {e}")))
                }
                408 | 429 | 500..=599 => {
                    tracing::warn!(attempt, status, "backend transient status");
                    last = format!("HTTP {status}: {}", truncate(&text, 200));
                }
                _ => {
                    return Err(BackendError::Http {
                        status,
                        body: truncate(&text, 500),
                    })
                }
            }
        }
        Err(BackendError::Transient {
            attempts,
            message: last,
        })
    }

    pub fn chat_body(&self, req: &ChatRequest) -> Value {
        let messages: Vec<Value> = req
            .messages
            .iter()
            .map(|m| {
                let content: Vec<Value> = m
                    .parts
                    .iter()
                    .map(|p| match p {
                        Part::Text { text } => json!({"type": "text", "text": text}),
                        Part::Image { reference, .. } if self.config.send_images => {
                            json!({"type": "image_url", "image_url": {"url": reference}})
                        }
                        Part::Image { caption, .. } => json!({"type": "text", "text": format!("[image: {caption}]")}),
                    })
                    .collect();
                json!({"role": m.role.as_str(), "content": content})
            })
            .collect();
        json!({
            "model": self.config.chat_model,
            "messages": messages,
            "max_tokens": req.max_output_tokens,
            "temperature": req.temperature,
        })
    }
}

fn truncate(s: &str, n: usize) -> String {
    s.chars().take(n).collect()
}

fn usage_of(v: &Value) -> TokenUsage {
    let get = |k: &str| v.get("usage").and_then(|u| u.get(k)).and_then(Value::as_u64).unwrap_or(0);
    TokenUsage::new(get("prompt_tokens"), get("completion_tokens"))
}

impl Provider for RemoteProvider {
    fn kind(&self) -> BackendKind {
        BackendKind::Remote
    }

    fn complete(&self, req: &ChatRequest) -> Result<ChatReply, BackendError> {
        let v = self.post("chat/completions", &self.chat_body(req))?;
        let text = v
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| BackendError::Protocol("missing choices[0].message.content".into()))?;
        Ok(ChatReply {
            text: text.to_string(),
            usage: usage_of(&v),
        })
    }

    fn embed(&self, text: &str) -> Result<(Vec<f32>, TokenUsage), BackendError> {
        let body = json!({"model": self.config.embedding_model, "input": text});
        let v = self.post("embeddings", &body)?;
        let arr = v
            .pointer("/data/0/embedding")
            .and_then(Value::as_array)
            .ok_or_else(|| BackendError::Protocol("missing data[0].embedding".into()))?;
        let vec = arr
            .iter()
            .map(|x| x.as_f64().map(|f| f as f32))
            .collect::<Option<Vec<f32>>>()
            .ok_or_else(|| BackendError::Protocol("embedding contains a non-number".into()))?;
        if vec.is_empty() {
            return Err(BackendError::Protocol("empty embedding".into()));
        }
        Ok((vec, usage_of(&v)))
    }
}
