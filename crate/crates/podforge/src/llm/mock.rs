//! Deterministic in-memory providers for tests and dry runs.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Mutex;

use super::{CompletionProvider, CompletionRequest, CompletionResponse, ProviderError};

/// Replays a fixed sequence of responses and records every request.
/// Returns `ProviderError::Malformed` once the sequence is exhausted.
pub struct ScriptedProvider {
    responses: Mutex<VecDeque<String>>,
    requests: Mutex<Vec<CompletionRequest>>,
}

impl ScriptedProvider {
    pub fn new<S: Into<String>>(responses: Vec<S>) -> Self {
        Self {
            responses: Mutex::new(responses.into_iter().map(Into::into).collect()),
            requests: Mutex::new(Vec::new()),
        }
    }

    pub fn requests(&self) -> Vec<CompletionRequest> {
        self.requests.lock().unwrap().clone()
    }
}

impl CompletionProvider for ScriptedProvider {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ProviderError> {
        self.requests.lock().unwrap().push(request.clone());
        self.responses
            .lock()
            .unwrap()
            .pop_front()
            .map(|text| CompletionResponse { text })
            .ok_or_else(|| ProviderError::Malformed("scripted responses exhausted".into()))
    }
}

/// Routes each request through a closure. The workhorse for
/// order-independent mocks (parallel guest fan-out, swap-order judges).
pub struct FnProvider<F>(pub F);

impl<F> CompletionProvider for FnProvider<F>
where
    F: Fn(&CompletionRequest) -> Result<CompletionResponse, ProviderError> + Send + Sync,
{
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ProviderError> {
        self.0(request)
    }
}

/// Convenience constructor: closure from request text to response text.
pub fn respond_with<F>(f: F) -> FnProvider<impl Fn(&CompletionRequest) -> Result<CompletionResponse, ProviderError> + Send + Sync>
where
    F: Fn(&str) -> String + Send + Sync,
{
    FnProvider(move |req: &CompletionRequest| {
        Ok(CompletionResponse { text: f(req.last_user_content()) })
    })
}

/// Fails the first `n` calls with a transport error, then delegates.
pub struct FailingProvider<P> {
    remaining: AtomicU32,
    inner: P,
}

impl<P> FailingProvider<P> {
    pub fn new(failures: u32, inner: P) -> Self {
        Self { remaining: AtomicU32::new(failures), inner }
    }
}

impl<P: CompletionProvider> CompletionProvider for FailingProvider<P> {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ProviderError> {
        let prev = self
            .remaining
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1))
            .unwrap_or(0);
        if prev > 0 {
            return Err(ProviderError::Transport("injected failure".into()));
        }
        self.inner.complete(request)
    }
}

/// Records requests while delegating to another provider.
pub struct CaptureProvider<P> {
    inner: P,
    requests: Mutex<Vec<CompletionRequest>>,
}

impl<P> CaptureProvider<P> {
    pub fn new(inner: P) -> Self {
        Self { inner, requests: Mutex::new(Vec::new()) }
    }

    pub fn requests(&self) -> Vec<CompletionRequest> {
        self.requests.lock().unwrap().clone()
    }
}

impl<P: CompletionProvider> CompletionProvider for CaptureProvider<P> {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ProviderError> {
        self.requests.lock().unwrap().push(request.clone());
        self.inner.complete(request)
    }
}
