//! Abstract chat-completion interface: wire types, provider trait, retry
//! policy, and structured (JSON) output handling with one repair re-prompt.

pub mod http;
pub mod mock;

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Environment variable naming the completion endpoint URL.
pub const ENV_LLM_URL: &str = "POD_LLM_URL";
/// Environment variable holding the completion endpoint bearer token.
pub const ENV_LLM_KEY: &str = "POD_LLM_KEY";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: "system".into(), content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self { role: "user".into(), content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: "assistant".into(), content: content.into() }
    }
}

/// One completion call. Serializes to the wire body verbatim:
/// `{"model": ..., "messages": [...], "temperature": ..., "seed": ...}`
/// with `seed` omitted when unset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
}

impl CompletionRequest {
    pub fn new(model: impl Into<String>, temperature: f64, seed: Option<u64>) -> Self {
        Self { model: model.into(), messages: Vec::new(), temperature, seed }
    }

    pub fn with_user(mut self, content: impl Into<String>) -> Self {
        self.messages.push(ChatMessage::user(content));
        self
    }

    /// Text of the last user message; mock providers route on this.
    pub fn last_user_content(&self) -> &str {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == "user")
            .map(|m| m.content.as_str())
            .unwrap_or("")
    }
}

/// Wire response body: `{"text": ...}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub text: String,
}

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("request timed out after {0:?}")]
    Timeout(Duration),
    #[error("endpoint returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed provider response: {0}")]
    Malformed(String),
    #[error("provider misconfigured: {0}")]
    Config(String),
}

impl ProviderError {
    /// Retry covers transport-level faults only; malformed payloads and
    /// client errors fail fast.
    pub fn is_retryable(&self) -> bool {
        match self {
            ProviderError::Transport(_) | ProviderError::Timeout(_) => true,
            ProviderError::Status { status, .. } => *status == 429 || *status >= 500,
            ProviderError::Malformed(_) | ProviderError::Config(_) => false,
        }
    }
}

/// A synchronous chat-completion backend. Implementations must be safe to
/// call from several threads at once; guest fan-out and batch evaluation
/// share one provider across workers.
pub trait CompletionProvider: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ProviderError>;
}

impl<P: CompletionProvider + ?Sized> CompletionProvider for &P {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ProviderError> {
        (**self).complete(request)
    }
}

/// Bounded retries with exponential backoff, applied to retryable
/// [`ProviderError`]s only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub initial_backoff: Duration,
    pub backoff_multiplier: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { attempts: 3, initial_backoff: Duration::from_secs(1), backoff_multiplier: 2.0 }
    }
}

impl RetryPolicy {
    /// Policy with no sleep between attempts, for tests.
    pub fn immediate(attempts: u32) -> Self {
        Self { attempts, initial_backoff: Duration::ZERO, backoff_multiplier: 1.0 }
    }

    pub fn run<T>(
        &self,
        mut op: impl FnMut() -> Result<T, ProviderError>,
    ) -> Result<T, ProviderError> {
        let attempts = self.attempts.max(1);
        let mut backoff = self.initial_backoff;
        let mut last_err: Option<ProviderError> = None;
        for attempt in 0..attempts {
            if attempt > 0 {
                if !backoff.is_zero() {
                    std::thread::sleep(backoff);
                }
                backoff = backoff.mul_f64(self.backoff_multiplier);
            }
            match op() {
                Ok(v) => return Ok(v),
                Err(e) if e.is_retryable() && attempt + 1 < attempts => {
                    log::warn!("retryable provider error (attempt {}): {e}", attempt + 1);
                    last_err = Some(e);
                }
                Err(e) => return Err(e),
            }
        }
        Err(last_err.expect("at least one attempt"))
    }
}

/// Structured response rejected twice: once as delivered and once after
/// the repair re-prompt.
#[derive(Debug, Error)]
#[error("structured response rejected after repair attempt: {reason}")]
pub struct SchemaError {
    pub reason: String,
}

#[derive(Debug, Error)]
pub enum StructuredError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Schema(#[from] SchemaError),
}

/// Completes `request` and parses the reply as JSON into `T`, then runs
/// `validate` on (raw reply text, parsed value). On the first parse or
/// validation failure the model is re-prompted once with the failure
/// reason; a second failure is a [`SchemaError`]. Transport retries per
/// `retry` wrap each individual call.
pub fn complete_structured<T, V>(
    provider: &dyn CompletionProvider,
    retry: &RetryPolicy,
    mut request: CompletionRequest,
    validate: V,
) -> Result<T, StructuredError>
where
    T: DeserializeOwned,
    V: Fn(&str, &T) -> Result<(), String>,
{
    let response = retry.run(|| provider.complete(&request))?;
    match parse_and_validate(&response.text, &validate) {
        Ok(v) => Ok(v),
        Err(reason) => {
            log::warn!("structured reply rejected, re-prompting once: {reason}");
            request.messages.push(ChatMessage::assistant(response.text.clone()));
            request.messages.push(ChatMessage::user(repair_instruction(&reason)));
            let repaired = retry.run(|| provider.complete(&request))?;
            parse_and_validate(&repaired.text, &validate)
                .map_err(|reason| SchemaError { reason }.into())
        }
    }
}

fn repair_instruction(reason: &str) -> String {
    format!(
        "Your previous reply could not be used: {reason}. \
         Respond again with only the corrected JSON object and no other text."
    )
}

fn parse_and_validate<T, V>(text: &str, validate: &V) -> Result<T, String>
where
    T: DeserializeOwned,
    V: Fn(&str, &T) -> Result<(), String>,
{
    let candidate = extract_json(text);
    let value: T = serde_json::from_str(candidate).map_err(|e| format!("invalid JSON: {e}"))?;
    validate(text, &value)?;
    Ok(value)
}

/// Best-effort extraction of the JSON document from a chat reply: a fenced
/// ```json block if present, otherwise the span from the first `{` or `[`
/// to the matching end of the text.
pub fn extract_json(text: &str) -> &str {
    let trimmed = text.trim();
    if let Some(fenced) = extract_fenced(trimmed) {
        return fenced;
    }
    let open = trimmed.find(['{', '[']);
    let close = trimmed.rfind(['}', ']']);
    match (open, close) {
        (Some(a), Some(b)) if b >= a => &trimmed[a..=b],
        _ => trimmed,
    }
}

fn extract_fenced(text: &str) -> Option<&str> {
    let start = text.find("```")?;
    let after = &text[start + 3..];
    let body_start = after.find('\n')? + 1;
    let body = &after[body_start..];
    let end = body.find("```")?;
    Some(body[..end].trim())
}
