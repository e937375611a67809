//! Chat-completions client for any endpoint speaking the common JSON shape:
//! POST with `model`, `messages`, `temperature`, `max_tokens`; reply with
//! `choices[0].message.content`.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sampling parameters for the long-answer generation call.
pub const GENERATION_TEMPERATURE: f64 = 0.8;
pub const GENERATION_MAX_TOKENS: u32 = 1_000;
/// Sampling parameters for the extraction call.
pub const EXTRACTION_TEMPERATURE: f64 = 0.3;
pub const EXTRACTION_MAX_TOKENS: u32 = 50;
/// Sampling parameters for the verifier call, pinned fully deterministic
/// since the contract is a single word.
pub const VERIFIER_TEMPERATURE: f64 = 0.0;
pub const VERIFIER_MAX_TOKENS: u32 = 5;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "system".into(),
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "user".into(),
            content: content.into(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Forwarded when present; endpoints that support seeded sampling use
    /// it, and the built-in mock models key their determinism off it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl CompletionRequest {
    pub fn new(model: impl Into<String>, system: &str, user: &str) -> Self {
        CompletionRequest {
            model: model.into(),
            messages: vec![ChatMessage::system(system), ChatMessage::user(user)],
            temperature: 1.0,
            max_tokens: 256,
            seed: None,
        }
    }

    pub fn with_params(mut self, temperature: f64, max_tokens: u32) -> Self {
        self.temperature = temperature;
        self.max_tokens = max_tokens;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// Content of the last user message, or empty.
    pub fn last_user_content(&self) -> &str {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == "user")
            .map(|m| m.content.as_str())
            .unwrap_or("")
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub text: String,
    pub finish_reason: Option<String>,
    pub prompt_tokens: Option<u32>,
    pub completion_tokens: Option<u32>,
}

impl CompletionResponse {
    pub fn from_text(text: impl Into<String>) -> Self {
        CompletionResponse {
            text: text.into(),
            finish_reason: Some("stop".into()),
            prompt_tokens: None,
            completion_tokens: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum LlmError {
    /// Transport-level failure after exhausting the retry budget.
    #[error("endpoint unreachable after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    /// Non-success HTTP status after exhausting the retry budget.
    #[error("endpoint returned status {status} after {attempts} attempts")]
    Http { status: u16, attempts: u32 },
    /// The body came back but did not have the expected shape.
    #[error("malformed completion response: {0}")]
    Protocol(String),
    #[error("credential variable {0} is not set")]
    MissingCredentials(String),
}

impl LlmError {
    /// Whether a later identical call could succeed.
    pub fn is_retriable(&self) -> bool {
        matches!(self, LlmError::Transport { .. } | LlmError::Http { .. })
    }
}

/// Anything that can answer a completion request: a real HTTP endpoint or
/// one of the scripted mock models.
pub trait ChatModel: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError>;
}

/// Retry schedule for transient endpoint failures.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            initial_delay_ms: 500,
            max_delay_ms: 8_000,
        }
    }
}

impl RetryPolicy {
    fn delay(&self, attempt: u32) -> Duration {
        let ms = self
            .initial_delay_ms
            .saturating_mul(1u64 << attempt.min(16))
            .min(self.max_delay_ms);
        Duration::from_millis(ms)
    }
}

/// HTTP chat-completions endpoint.
pub struct HttpChatModel {
    url: String,
    api_key: Option<String>,
    retry: RetryPolicy,
    agent: ureq::Agent,
}

impl HttpChatModel {
    pub fn new(url: impl Into<String>) -> Self {
        HttpChatModel {
            url: url.into(),
            api_key: None,
            retry: RetryPolicy::default(),
            agent: ureq::AgentBuilder::new()
                .timeout(Duration::from_secs(120))
                .build(),
        }
    }

    /// Read the bearer token from the named environment variable. The key
    /// itself is never logged or persisted.
    pub fn with_key_from_env(mut self, var: &str) -> Result<Self, LlmError> {
        match std::env::var(var) {
            Ok(key) => {
                self.api_key = Some(key);
                Ok(self)
            }
            Err(_) => Err(LlmError::MissingCredentials(var.to_string())),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.agent = ureq::AgentBuilder::new().timeout(timeout).build();
        self
    }

    fn post_once(&self, request: &CompletionRequest) -> Result<CompletionResponse, PostError> {
        let mut req = self
            .agent
            .post(&self.url)
            .set("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.set("Authorization", &format!("Bearer {key}"));
        }
        let body = serde_json::to_value(request).expect("request serializes");
        match req.send_json(body) {
            Ok(response) => {
                let value: serde_json::Value = response
                    .into_json()
                    .map_err(|e| PostError::Fatal(LlmError::Protocol(e.to_string())))?;
                parse_completion_body(&value).map_err(PostError::Fatal)
            }
            Err(ureq::Error::Status(status, _)) => Err(PostError::Status(status)),
            Err(ureq::Error::Transport(t)) => Err(PostError::Transport(t.to_string())),
        }
    }
}

enum PostError {
    Transport(String),
    Status(u16),
    Fatal(LlmError),
}

/// Pulls `choices[0].message.content` and usage counters out of the body.
pub fn parse_completion_body(value: &serde_json::Value) -> Result<CompletionResponse, LlmError> {
    let choice = value
        .get("choices")
        .and_then(|c| c.get(0))
        .ok_or_else(|| LlmError::Protocol("no choices in response".into()))?;
    let text = choice
        .get("message")
        .and_then(|m| m.get("content"))
        .and_then(|c| c.as_str())
        .ok_or_else(|| LlmError::Protocol("choices[0].message.content missing".into()))?;
    let finish_reason = choice
        .get("finish_reason")
        .and_then(|f| f.as_str())
        .map(str::to_string);
    let usage = value.get("usage");
    let tokens = |key: &str| {
        usage
            .and_then(|u| u.get(key))
            .and_then(|v| v.as_u64())
            .map(|v| v as u32)
    };
    Ok(CompletionResponse {
        text: text.to_string(),
        finish_reason,
        prompt_tokens: tokens("prompt_tokens"),
        completion_tokens: tokens("completion_tokens"),
    })
}

impl ChatModel for HttpChatModel {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        let mut last: Option<PostError> = None;
        for attempt in 0..self.retry.max_attempts {
            if attempt > 0 {
                std::thread::sleep(self.retry.delay(attempt - 1));
            }
            match self.post_once(request) {
                Ok(response) => return Ok(response),
                Err(PostError::Fatal(e)) => return Err(e),
                Err(retriable) => last = Some(retriable),
            }
        }
        Err(match last {
            Some(PostError::Transport(message)) => LlmError::Transport {
                attempts: self.retry.max_attempts,
                message,
            },
            Some(PostError::Status(status)) => LlmError::Http {
                status,
                attempts: self.retry.max_attempts,
            },
            _ => LlmError::Transport {
                attempts: self.retry.max_attempts,
                message: "no attempt performed".into(),
            },
        })
    }
}
