//! Backend selection by URL scheme. `mock:` wires the deterministic
//! in-process providers so the whole pipeline runs offline; `http://` and
//! `https://` wire the blocking network clients. Anything else is a
//! configuration error.

use std::time::Duration;

use podforge::embed::{EmbeddingProvider, HashEmbedder, HttpEmbeddingProvider};
use podforge::llm::http::HttpCompletionProvider;
use podforge::llm::CompletionProvider;
use podforge::offline::OfflineLlm;
use podforge::synth::mock::{NoiseTta, ToneTts};
use podforge::synth::{HttpTtaProvider, HttpTtsProvider, TtaProvider, TtsProvider};

use crate::config::RunConfig;
use crate::error::CliError;

const LLM_TIMEOUT: Duration = Duration::from_secs(120);
const SYNTH_TIMEOUT: Duration = Duration::from_secs(300);
const EMBED_TIMEOUT: Duration = Duration::from_secs(60);
/// Dimension of the offline hash embedder.
pub const MOCK_EMBED_DIM: usize = 64;

pub struct Providers {
    pub llm: Box<dyn CompletionProvider>,
    pub tts: Box<dyn TtsProvider>,
    pub tta: Box<dyn TtaProvider>,
    pub embedder: Box<dyn EmbeddingProvider>,
}

pub fn build(config: &RunConfig) -> Result<Providers, CliError> {
    Ok(Providers {
        llm: build_llm(&config.llm_url)?,
        tts: build_tts(&config.tts_url, config.sample_rate_hz)?,
        tta: build_tta(&config.tta_url, config.sample_rate_hz)?,
        embedder: build_embedder(&config.embed_url)?,
    })
}

fn is_mock(url: &str) -> bool {
    url == "mock" || url.starts_with("mock:")
}

fn is_http(url: &str) -> bool {
    url.starts_with("http://") || url.starts_with("https://")
}

fn scheme_error(what: &str, url: &str) -> CliError {
    CliError::usage(format!(
        "{what} endpoint '{url}' is not supported (expected mock: or an http(s):// URL)"
    ))
}

fn build_llm(url: &str) -> Result<Box<dyn CompletionProvider>, CliError> {
    if is_mock(url) {
        return Ok(Box::new(OfflineLlm::new()));
    }
    if is_http(url) {
        let key = std::env::var(podforge::llm::ENV_LLM_KEY).ok();
        let provider = HttpCompletionProvider::new(url, key, LLM_TIMEOUT)
            .map_err(CliError::usage)?;
        return Ok(Box::new(provider));
    }
    Err(scheme_error("completion", url))
}

fn build_tts(url: &str, sample_rate_hz: u32) -> Result<Box<dyn TtsProvider>, CliError> {
    if is_mock(url) {
        return Ok(Box::new(ToneTts { sample_rate_hz }));
    }
    if is_http(url) {
        let provider = HttpTtsProvider::new(url, SYNTH_TIMEOUT).map_err(CliError::usage)?;
        return Ok(Box::new(provider));
    }
    Err(scheme_error("speech synthesis", url))
}

fn build_tta(url: &str, sample_rate_hz: u32) -> Result<Box<dyn TtaProvider>, CliError> {
    if is_mock(url) {
        return Ok(Box::new(NoiseTta { sample_rate_hz }));
    }
    if is_http(url) {
        let provider = HttpTtaProvider::new(url, SYNTH_TIMEOUT).map_err(CliError::usage)?;
        return Ok(Box::new(provider));
    }
    Err(scheme_error("audio synthesis", url))
}

fn build_embedder(url: &str) -> Result<Box<dyn EmbeddingProvider>, CliError> {
    if is_mock(url) {
        return Ok(Box::new(HashEmbedder::new(MOCK_EMBED_DIM)));
    }
    if is_http(url) {
        let provider = HttpEmbeddingProvider::new(url, EMBED_TIMEOUT).map_err(CliError::usage)?;
        return Ok(Box::new(provider));
    }
    Err(scheme_error("embedding", url))
}
