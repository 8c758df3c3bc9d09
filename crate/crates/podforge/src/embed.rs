//! Text-embedding providers. Embeddings back semantic divergence and
//! voice-library dedup; both only need cosine geometry, so any
//! fixed-dimension real vector source fits.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::ProviderError;
use crate::stablehash::fnv1a64;

/// Environment variable naming the embedding endpoint URL.
pub const ENV_EMBED_URL: &str = "POD_EMBED_URL";

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("embedding contains a non-finite component")]
    NonFinite,
    #[error("no texts to embed")]
    Empty,
}

pub trait EmbeddingProvider: Send + Sync {
    /// One vector per input text, all of equal dimension, all finite.
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbeddingError>;

    /// Stable identifier recorded in config snapshots.
    fn id(&self) -> String;
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for &P {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbeddingError> {
        (**self).embed(texts)
    }

    fn id(&self) -> String {
        (**self).id()
    }
}

pub(crate) fn check_uniform(vectors: &[Vec<f64>]) -> Result<(), EmbeddingError> {
    let Some(first) = vectors.first() else {
        return Err(EmbeddingError::Empty);
    };
    for v in vectors {
        if v.len() != first.len() {
            return Err(EmbeddingError::Dimension { expected: first.len(), got: v.len() });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(EmbeddingError::NonFinite);
        }
    }
    Ok(())
}

/// Deterministic hash-projection embedder: each token lands in an FNV-keyed
/// bucket with a hash-derived sign, then the vector is L2-normalized.
/// No semantic content, but stable across runs and platforms, which is what
/// offline runs and bit-exactness tests need. Texts sharing many tokens get
/// high cosine; disjoint texts sit near zero.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dim: usize,
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self { dim: 64 }
    }
}

impl HashEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "embedding dimension must be at least 1");
        Self { dim }
    }

    fn embed_one(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        let tokens = crate::metrics::tokenize(text);
        for token in &tokens {
            let h = fnv1a64(token.as_bytes());
            let bucket = ((h >> 1) % self.dim as u64) as usize;
            let sign = if h & 1 == 0 { 1.0 } else { -1.0 };
            v[bucket] += sign;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            v[0] = 1.0;
        } else {
            for x in &mut v {
                *x /= norm;
            }
        }
        v
    }
}

impl EmbeddingProvider for HashEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbeddingError> {
        if texts.is_empty() {
            return Err(EmbeddingError::Empty);
        }
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }

    fn id(&self) -> String {
        format!("fnv_hash_{}_v1", self.dim)
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    embeddings: Vec<Vec<f64>>,
}

/// Blocking HTTP embedder: POST `{"texts": [...]}` ->
/// `{"embeddings": [[...], ...]}`.
pub struct HttpEmbeddingProvider {
    client: reqwest::blocking::Client,
    url: String,
    timeout: std::time::Duration,
}

impl HttpEmbeddingProvider {
    pub fn new(url: impl Into<String>, timeout: std::time::Duration) -> Result<Self, ProviderError> {
        let url = url.into();
        if url.is_empty() {
            return Err(ProviderError::Config("embedding endpoint URL is empty".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ProviderError::Config(e.to_string()))?;
        Ok(Self { client, url, timeout })
    }

    pub fn from_env(timeout: std::time::Duration) -> Result<Self, ProviderError> {
        let url = std::env::var(ENV_EMBED_URL)
            .map_err(|_| ProviderError::Config(format!("{ENV_EMBED_URL} is not set")))?;
        Self::new(url, timeout)
    }
}

impl EmbeddingProvider for HttpEmbeddingProvider {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbeddingError> {
        if texts.is_empty() {
            return Err(EmbeddingError::Empty);
        }
        let response = self
            .client
            .post(&self.url)
            .json(&EmbedRequest { texts })
            .send()
            .map_err(|e| crate::llm::http::classify(e, self.timeout))?;
        let status = response.status();
        let body = response.text().map_err(|e| crate::llm::http::classify(e, self.timeout))?;
        if !status.is_success() {
            return Err(ProviderError::Status {
                status: status.as_u16(),
                body: crate::llm::http::truncate(&body),
            }
            .into());
        }
        let parsed: EmbedResponse = serde_json::from_str(&body)
            .map_err(|e| ProviderError::Malformed(e.to_string()))?;
        if parsed.embeddings.len() != texts.len() {
            return Err(ProviderError::Malformed(format!(
                "expected {} embeddings, got {}",
                texts.len(),
                parsed.embeddings.len()
            ))
            .into());
        }
        check_uniform(&parsed.embeddings)?;
        Ok(parsed.embeddings)
    }

    fn id(&self) -> String {
        format!("http_v1:{}", self.url)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_embedder_is_deterministic_and_normalized() {
        let e = HashEmbedder::default();
        let texts = vec!["a calm low voice".to_string(), "bright energetic tone".to_string()];
        let a = e.embed(&texts).unwrap();
        let b = e.embed(&texts).unwrap();
        assert_eq!(a, b);
        for v in &a {
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12, "norm {norm}");
        }
    }

    #[test]
    fn identical_texts_have_identical_embeddings() {
        let e = HashEmbedder::new(32);
        let out = e.embed(&["same words".into(), "same words".into()]).unwrap();
        assert_eq!(out[0], out[1]);
    }

    #[test]
    fn empty_text_gets_a_unit_fallback_vector() {
        let e = HashEmbedder::new(8);
        let out = e.embed(&["".into()]).unwrap();
        assert_eq!(out[0][0], 1.0);
    }

    #[test]
    fn uniformity_check_rejects_ragged_vectors() {
        let err = check_uniform(&[vec![1.0, 0.0], vec![1.0]]).unwrap_err();
        assert!(matches!(err, EmbeddingError::Dimension { expected: 2, got: 1 }));
    }
}
