//! Deterministic synthesis backends for offline runs and tests. All output
//! is a pure function of the request, so repeated pipelines are
//! byte-identical.

use std::sync::Mutex;

use crate::llm::ProviderError;
use crate::stablehash::{fnv1a64, fnv1a64_extend, FNV_OFFSET};
use crate::wav;

use super::{TtaProvider, TtaRequest, TtsProvider, TtsRequest};

/// Fixed-length silence regardless of input, for exact-duration tests.
pub struct SilenceTts {
    pub duration_s: f64,
    pub sample_rate_hz: u32,
}

impl TtsProvider for SilenceTts {
    fn synthesize(&self, _request: &TtsRequest) -> Result<Vec<u8>, ProviderError> {
        let n = (self.duration_s * f64::from(self.sample_rate_hz)).round() as usize;
        wav::encode_wav_mono16(&vec![0.0; n], self.sample_rate_hz)
            .map_err(|e| ProviderError::Malformed(e.to_string()))
    }
}

/// Speech stand-in: a faded sine whose pitch is keyed to the reference
/// voice and instruction, with duration proportional to the text length.
/// Different voices sound different; the same request always returns the
/// same bytes.
pub struct ToneTts {
    pub sample_rate_hz: u32,
}

impl TtsProvider for ToneTts {
    fn synthesize(&self, request: &TtsRequest) -> Result<Vec<u8>, ProviderError> {
        let mut h = fnv1a64(request.reference_audio_b64.as_bytes());
        if let Some(instruction) = &request.instruction {
            h = fnv1a64_extend(h, instruction.as_bytes());
        }
        let freq = 160.0 + (h % 240) as f64;
        let words = request.text.split_whitespace().count().max(1);
        let duration_s = 0.24 + 0.06 * words as f64;
        let n = (duration_s * f64::from(self.sample_rate_hz)).round() as usize;
        let samples: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / f64::from(self.sample_rate_hz);
                let fade = fade_at(i, n);
                0.2 * fade * (2.0 * std::f64::consts::PI * freq * t).sin()
            })
            .collect();
        wav::encode_wav_mono16(&samples, self.sample_rate_hz)
            .map_err(|e| ProviderError::Malformed(e.to_string()))
    }
}

/// Ambient stand-in: low-amplitude LCG noise seeded by the description,
/// exactly the requested duration.
pub struct NoiseTta {
    pub sample_rate_hz: u32,
}

impl TtaProvider for NoiseTta {
    fn generate(&self, request: &TtaRequest) -> Result<Vec<u8>, ProviderError> {
        let n = (request.duration_s * f64::from(self.sample_rate_hz)).round() as usize;
        let mut state = fnv1a64(request.description.as_bytes()) | 1;
        let samples: Vec<f64> = (0..n)
            .map(|i| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let unit = (state >> 11) as f64 / (1u64 << 53) as f64;
                0.25 * fade_at(i, n) * (2.0 * unit - 1.0)
            })
            .collect();
        wav::encode_wav_mono16(&samples, self.sample_rate_hz)
            .map_err(|e| ProviderError::Malformed(e.to_string()))
    }
}

fn fade_at(i: usize, n: usize) -> f64 {
    const FADE: usize = 240;
    let edge = FADE.min(n / 2).max(1);
    let head = (i + 1).min(edge) as f64 / edge as f64;
    let tail = (n - i).min(edge) as f64 / edge as f64;
    head.min(tail)
}

/// Records TTS requests while delegating.
pub struct CaptureTts<P> {
    inner: P,
    requests: Mutex<Vec<TtsRequest>>,
}

impl<P> CaptureTts<P> {
    pub fn new(inner: P) -> Self {
        Self { inner, requests: Mutex::new(Vec::new()) }
    }

    pub fn requests(&self) -> Vec<TtsRequest> {
        self.requests.lock().unwrap().clone()
    }
}

impl<P: TtsProvider> TtsProvider for CaptureTts<P> {
    fn synthesize(&self, request: &TtsRequest) -> Result<Vec<u8>, ProviderError> {
        self.requests.lock().unwrap().push(request.clone());
        self.inner.synthesize(request)
    }
}

/// Records TTA requests while delegating.
pub struct CaptureTta<P> {
    inner: P,
    requests: Mutex<Vec<TtaRequest>>,
}

impl<P> CaptureTta<P> {
    pub fn new(inner: P) -> Self {
        Self { inner, requests: Mutex::new(Vec::new()) }
    }

    pub fn requests(&self) -> Vec<TtaRequest> {
        self.requests.lock().unwrap().clone()
    }
}

impl<P: TtaProvider> TtaProvider for CaptureTta<P> {
    fn generate(&self, request: &TtaRequest) -> Result<Vec<u8>, ProviderError> {
        self.requests.lock().unwrap().push(request.clone());
        self.inner.generate(request)
    }
}

const _: () = {
    assert!(FNV_OFFSET != 0);
};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tone_is_deterministic_and_voice_dependent() {
        let tts = ToneTts { sample_rate_hz: 24_000 };
        let req_a = TtsRequest {
            text: "hello there".into(),
            reference_audio_b64: "QUFB".into(),
            instruction: None,
        };
        let req_b = TtsRequest { reference_audio_b64: "QkJC".into(), ..req_a.clone() };
        assert_eq!(tts.synthesize(&req_a).unwrap(), tts.synthesize(&req_a).unwrap());
        assert_ne!(tts.synthesize(&req_a).unwrap(), tts.synthesize(&req_b).unwrap());
    }

    #[test]
    fn noise_duration_is_exact() {
        let tta = NoiseTta { sample_rate_hz: 24_000 };
        let bytes = tta
            .generate(&TtaRequest { description: "rain".into(), duration_s: 2.5 })
            .unwrap();
        let (samples, rate) = wav::decode_wav_mono(&bytes).unwrap();
        assert_eq!(rate, 24_000);
        assert_eq!(samples.len(), 60_000);
    }
}
