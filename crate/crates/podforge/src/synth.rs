//! Speech and ambient-audio synthesis adapters.
//!
//! TTS synthesizes a line in the style of a reference voice, optionally
//! steered by a delivery instruction; TTA generates music or effects from
//! a description and target duration. Both return WAV bytes over the wire;
//! the [`Synthesizer`] decodes, resamples to the pipeline rate, and clamps
//! into [-1, 1], so every clip downstream shares one rate and range.

pub mod mock;

use std::path::Path;
use std::time::Duration;

use base64::Engine;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::{ProviderError, RetryPolicy};
use crate::resample::resample;
use crate::voice::VoiceEntry;
use crate::wav;

/// Environment variable naming the TTS endpoint URL.
pub const ENV_TTS_URL: &str = "POD_TTS_URL";
/// Environment variable naming the text-to-audio endpoint URL.
pub const ENV_TTA_URL: &str = "POD_TTA_URL";

/// Decoded audio at a known rate. `source_item_index` ties a clip back to
/// the audio-script item it renders.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
    pub source_item_index: usize,
}

impl AudioClip {
    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate_hz)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.samples.is_empty() {
            return Err(SynthError::EmptyClip { item_index: self.source_item_index });
        }
        if self.sample_rate_hz == 0 {
            return Err(SynthError::AudioDecode("clip with zero sample rate".into()));
        }
        Ok(())
    }
}

/// Wire body for speech synthesis: the text, a base64 WAV of the
/// reference voice, and an optional delivery instruction (omitted when
/// absent, so instruction-free ablations send no empty field).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TtsRequest {
    pub text: String,
    pub reference_audio_b64: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub instruction: Option<String>,
}

/// Wire body for ambient audio: description plus target duration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TtaRequest {
    pub description: String,
    pub duration_s: f64,
}

/// Speech synthesis backend returning WAV bytes.
pub trait TtsProvider: Send + Sync {
    fn synthesize(&self, request: &TtsRequest) -> Result<Vec<u8>, ProviderError>;
}

/// Ambient audio backend returning WAV bytes.
pub trait TtaProvider: Send + Sync {
    fn generate(&self, request: &TtaRequest) -> Result<Vec<u8>, ProviderError>;
}

impl<P: TtsProvider + ?Sized> TtsProvider for &P {
    fn synthesize(&self, request: &TtsRequest) -> Result<Vec<u8>, ProviderError> {
        (**self).synthesize(request)
    }
}

impl<P: TtaProvider + ?Sized> TtaProvider for &P {
    fn generate(&self, request: &TtaRequest) -> Result<Vec<u8>, ProviderError> {
        (**self).generate(request)
    }
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("decoding provider audio: {0}")]
    AudioDecode(String),
    #[error("reading reference audio {path}: {source}")]
    ReferenceAudio {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("synthesis produced an empty clip for item {item_index}")]
    EmptyClip { item_index: usize },
}

impl From<wav::WavError> for SynthError {
    fn from(e: wav::WavError) -> Self {
        SynthError::AudioDecode(e.to_string())
    }
}

/// Blocking HTTP TTS adapter: POST the JSON request, read WAV bytes back.
pub struct HttpTtsProvider {
    client: reqwest::blocking::Client,
    url: String,
    timeout: Duration,
}

impl HttpTtsProvider {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Result<Self, ProviderError> {
        let url = url.into();
        if url.is_empty() {
            return Err(ProviderError::Config("TTS endpoint URL is empty".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ProviderError::Config(e.to_string()))?;
        Ok(Self { client, url, timeout })
    }

    pub fn from_env(timeout: Duration) -> Result<Self, ProviderError> {
        let url = std::env::var(ENV_TTS_URL)
            .map_err(|_| ProviderError::Config(format!("{ENV_TTS_URL} is not set")))?;
        Self::new(url, timeout)
    }
}

impl TtsProvider for HttpTtsProvider {
    fn synthesize(&self, request: &TtsRequest) -> Result<Vec<u8>, ProviderError> {
        post_for_bytes(&self.client, &self.url, request, self.timeout)
    }
}

/// Blocking HTTP TTA adapter with the same shape.
pub struct HttpTtaProvider {
    client: reqwest::blocking::Client,
    url: String,
    timeout: Duration,
}

impl HttpTtaProvider {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Result<Self, ProviderError> {
        let url = url.into();
        if url.is_empty() {
            return Err(ProviderError::Config("TTA endpoint URL is empty".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ProviderError::Config(e.to_string()))?;
        Ok(Self { client, url, timeout })
    }

    pub fn from_env(timeout: Duration) -> Result<Self, ProviderError> {
        let url = std::env::var(ENV_TTA_URL)
            .map_err(|_| ProviderError::Config(format!("{ENV_TTA_URL} is not set")))?;
        Self::new(url, timeout)
    }
}

impl TtaProvider for HttpTtaProvider {
    fn generate(&self, request: &TtaRequest) -> Result<Vec<u8>, ProviderError> {
        post_for_bytes(&self.client, &self.url, request, self.timeout)
    }
}

fn post_for_bytes<T: Serialize>(
    client: &reqwest::blocking::Client,
    url: &str,
    request: &T,
    timeout: Duration,
) -> Result<Vec<u8>, ProviderError> {
    let response = client
        .post(url)
        .json(request)
        .send()
        .map_err(|e| crate::llm::http::classify(e, timeout))?;
    let status = response.status();
    let bytes = response.bytes().map_err(|e| crate::llm::http::classify(e, timeout))?;
    if !status.is_success() {
        let body = String::from_utf8_lossy(&bytes).into_owned();
        return Err(ProviderError::Status {
            status: status.as_u16(),
            body: crate::llm::http::truncate(&body),
        });
    }
    Ok(bytes.to_vec())
}

/// Tolerated relative deviation between a requested TTA duration and what
/// the provider returns before a warning is logged.
pub const TTA_DURATION_TOLERANCE: f64 = 0.05;

pub struct Synthesizer<'a> {
    tts: &'a dyn TtsProvider,
    tta: &'a dyn TtaProvider,
    /// Pipeline rate every clip is converted to.
    pub target_rate_hz: u32,
    retry: RetryPolicy,
}

impl<'a> Synthesizer<'a> {
    pub fn new(
        tts: &'a dyn TtsProvider,
        tta: &'a dyn TtaProvider,
        target_rate_hz: u32,
        retry: RetryPolicy,
    ) -> Self {
        assert!(target_rate_hz > 0, "target rate must be positive");
        Self { tts, tta, target_rate_hz, retry }
    }

    /// Synthesizes one dialogue line in the style of `reference`, read
    /// from `reference_dir`-resolved audio. `instruction` steers delivery
    /// and is omitted from the wire request when `None`.
    pub fn synthesize_speech(
        &self,
        text: &str,
        reference: &VoiceEntry,
        reference_audio: &Path,
        instruction: Option<&str>,
        item_index: usize,
    ) -> Result<AudioClip, SynthError> {
        if text.trim().is_empty() {
            return Err(SynthError::Precondition("speech text is empty".into()));
        }
        let audio = std::fs::read(reference_audio).map_err(|source| {
            SynthError::ReferenceAudio { path: reference_audio.to_path_buf(), source }
        })?;
        let request = TtsRequest {
            text: text.to_string(),
            reference_audio_b64: base64::engine::general_purpose::STANDARD.encode(audio),
            instruction: instruction.map(str::to_string),
        };
        log::debug!("tts item {item_index}: voice '{}', {} chars", reference.voice_id, text.len());
        let bytes = self.retry.run(|| self.tts.synthesize(&request))?;
        self.finish_clip(&bytes, item_index)
    }

    /// Generates ambient audio of roughly `duration_s` seconds. Providers
    /// may come back within [`TTA_DURATION_TOLERANCE`]; larger deviations
    /// are logged and left to the mixer to trim or loop.
    pub fn synthesize_ambient(
        &self,
        description: &str,
        duration_s: f64,
        item_index: usize,
    ) -> Result<AudioClip, SynthError> {
        if description.trim().is_empty() {
            return Err(SynthError::Precondition("audio description is empty".into()));
        }
        if !(duration_s > 0.0) {
            return Err(SynthError::Precondition(format!(
                "requested duration {duration_s} must be positive"
            )));
        }
        let request = TtaRequest { description: description.to_string(), duration_s };
        let bytes = self.retry.run(|| self.tta.generate(&request))?;
        let clip = self.finish_clip(&bytes, item_index)?;
        let got = clip.duration_s();
        if (got - duration_s).abs() / duration_s > TTA_DURATION_TOLERANCE {
            log::warn!(
                "ambient item {item_index}: requested {duration_s:.3}s, provider returned {got:.3}s"
            );
        }
        Ok(clip)
    }

    fn finish_clip(&self, bytes: &[u8], item_index: usize) -> Result<AudioClip, SynthError> {
        let (samples, rate) = wav::decode_wav_mono(bytes)?;
        let samples = if rate == self.target_rate_hz {
            samples
        } else {
            resample(&samples, rate, self.target_rate_hz)
        };
        let samples: Vec<f64> = samples.into_iter().map(|s| s.clamp(-1.0, 1.0)).collect();
        let clip =
            AudioClip { samples, sample_rate_hz: self.target_rate_hz, source_item_index: item_index };
        clip.validate()?;
        Ok(clip)
    }
}
