//! Blocking HTTP client for the completion wire contract:
//! POST `{model, messages, temperature, seed?}` -> `{"text": ...}`.

use std::time::Duration;

use super::{
    CompletionProvider, CompletionRequest, CompletionResponse, ProviderError, ENV_LLM_KEY,
    ENV_LLM_URL,
};

pub struct HttpCompletionProvider {
    client: reqwest::blocking::Client,
    url: String,
    api_key: Option<String>,
    timeout: Duration,
}

impl HttpCompletionProvider {
    pub fn new(
        url: impl Into<String>,
        api_key: Option<String>,
        timeout: Duration,
    ) -> Result<Self, ProviderError> {
        let url = url.into();
        if url.is_empty() {
            return Err(ProviderError::Config("completion endpoint URL is empty".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ProviderError::Config(e.to_string()))?;
        Ok(Self { client, url, api_key, timeout })
    }

    /// Reads `POD_LLM_URL` (required) and `POD_LLM_KEY` (optional).
    pub fn from_env(timeout: Duration) -> Result<Self, ProviderError> {
        let url = std::env::var(ENV_LLM_URL)
            .map_err(|_| ProviderError::Config(format!("{ENV_LLM_URL} is not set")))?;
        let key = std::env::var(ENV_LLM_KEY).ok();
        Self::new(url, key, timeout)
    }
}

impl CompletionProvider for HttpCompletionProvider {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ProviderError> {
        let mut call = self.client.post(&self.url).json(request);
        if let Some(key) = &self.api_key {
            call = call.bearer_auth(key);
        }
        let response = call.send().map_err(|e| classify(e, self.timeout))?;
        let status = response.status();
        let body = response.text().map_err(|e| classify(e, self.timeout))?;
        if !status.is_success() {
            return Err(ProviderError::Status { status: status.as_u16(), body: truncate(&body) });
        }
        serde_json::from_str(&body)
            .map_err(|e| ProviderError::Malformed(format!("{e}; body: {}", truncate(&body))))
    }
}

pub(crate) fn classify(e: reqwest::Error, timeout: Duration) -> ProviderError {
    if e.is_timeout() {
        ProviderError::Timeout(timeout)
    } else {
        ProviderError::Transport(e.to_string())
    }
}

pub(crate) fn truncate(body: &str) -> String {
    const LIMIT: usize = 400;
    if body.len() <= LIMIT {
        body.to_string()
    } else {
        let mut end = LIMIT;
        while !body.is_char_boundary(end) {
            end -= 1;
        }
        format!("{}... ({} bytes)", &body[..end], body.len())
    }
}
