//! Reference-free text metrics over sliding token windows.
//!
//! All metrics share one normalization scheme: the token sequence is cut
//! into fixed-size windows (whole sequence when shorter than one window),
//! the metric is computed per window, and the per-window values are
//! averaged. This keeps scores comparable between scripts of different
//! lengths.
//!
//! - [`distinct_n`]: mean per-window ratio of unique n-grams to n-grams.
//! - [`mattr`]: mean per-window type-token ratio. Kept as its own routine
//!   even though it coincides with `distinct_n(.., 1, ..)`, so each can
//!   change independently.
//! - [`info_density`]: mean per-window Shannon entropy (bits) of the
//!   stopword-filtered token distribution.
//! - [`semantic_div`]: mean pairwise cosine distance between embeddings of
//!   consecutive non-overlapping windows.
//!
//! Per-window loops run on rayon under the `parallel` feature; the
//! [`seq`] module exposes sequential twins with identical results, so the
//! two paths can be benchmarked against each other.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::embed::{EmbeddingError, EmbeddingProvider};
use crate::par;

/// Identifier of [`tokenize`]'s scheme, recorded in config snapshots.
pub const TOKENIZER_ID: &str = "ws_alnum_v1";

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("invalid window spec: {0}")]
    InvalidWindowSpec(String),
    #[error("windows were built for {expected} tokens but {got} were supplied")]
    TokenCountMismatch { expected: usize, got: usize },
    #[error("no tokens to measure")]
    EmptyInput,
    #[error("window {index} has {len} tokens, too short for {n}-grams")]
    DegenerateWindow { index: usize, len: usize, n: usize },
    #[error("every window is all stopwords; informational density is undefined")]
    AllStopwords,
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

/// Lowercase, NFC-normalize, replace every non-alphanumeric character with
/// a space, split on whitespace. Scheme id [`TOKENIZER_ID`].
pub fn tokenize(text: &str) -> Vec<String> {
    let lowered: String = text.chars().flat_map(char::to_lowercase).collect();
    let normalized: String = lowered.nfc().collect();
    let spaced: String =
        normalized.chars().map(|c| if c.is_alphanumeric() { c } else { ' ' }).collect();
    spaced.split_whitespace().map(str::to_string).collect()
}

/// Precomputed half-open window bounds over a token sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowSeries {
    token_count: usize,
    window_size: usize,
    stride: usize,
    bounds: Vec<(usize, usize)>,
}

impl WindowSeries {
    pub fn bounds(&self) -> &[(usize, usize)] {
        &self.bounds
    }

    pub fn len(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }
}

/// Sliding windows of `window_size` tokens every `stride` tokens. A
/// sequence shorter than one window yields exactly one window covering the
/// whole sequence; otherwise every maximal full window is produced and any
/// tail shorter than `window_size` is left to the last full window.
pub fn make_windows(
    token_count: usize,
    window_size: usize,
    stride: usize,
) -> Result<WindowSeries, MetricsError> {
    if window_size == 0 {
        return Err(MetricsError::InvalidWindowSpec("window_size must be at least 1".into()));
    }
    if stride == 0 {
        return Err(MetricsError::InvalidWindowSpec("stride must be at least 1".into()));
    }
    if token_count == 0 {
        return Err(MetricsError::EmptyInput);
    }
    let mut bounds = Vec::new();
    if token_count <= window_size {
        bounds.push((0, token_count));
    } else {
        let mut start = 0;
        while start + window_size <= token_count {
            bounds.push((start, start + window_size));
            start += stride;
        }
    }
    Ok(WindowSeries { token_count, window_size, stride, bounds })
}

fn check_tokens(tokens: &[String], windows: &WindowSeries) -> Result<(), MetricsError> {
    if tokens.len() != windows.token_count {
        return Err(MetricsError::TokenCountMismatch {
            expected: windows.token_count,
            got: tokens.len(),
        });
    }
    Ok(())
}

fn window_distinct_value(tokens: &[String], bound: (usize, usize), n: usize) -> f64 {
    let window = &tokens[bound.0..bound.1];
    let gram_count = window.len() + 1 - n;
    let unique: HashSet<&[String]> = window.windows(n).collect();
    unique.len() as f64 / gram_count as f64
}

fn check_gram_fit(windows: &WindowSeries, n: usize) -> Result<(), MetricsError> {
    if n == 0 {
        return Err(MetricsError::InvalidWindowSpec("n-gram order must be at least 1".into()));
    }
    for (index, (start, end)) in windows.bounds.iter().enumerate() {
        let len = end - start;
        if len < n {
            return Err(MetricsError::DegenerateWindow { index, len, n });
        }
    }
    Ok(())
}

/// Mean per-window ratio of unique n-grams to total n-grams, in (0, 1].
pub fn distinct_n(
    tokens: &[String],
    n: usize,
    windows: &WindowSeries,
) -> Result<f64, MetricsError> {
    check_tokens(tokens, windows)?;
    check_gram_fit(windows, n)?;
    let values = par::map_collect(&windows.bounds, |b| window_distinct_value(tokens, *b, n));
    Ok(mean(&values))
}

fn window_ttr_value(tokens: &[String], bound: (usize, usize)) -> f64 {
    let window = &tokens[bound.0..bound.1];
    let unique: HashSet<&String> = window.iter().collect();
    unique.len() as f64 / window.len() as f64
}

/// Moving-average type-token ratio: mean per-window unique-token share.
pub fn mattr(tokens: &[String], windows: &WindowSeries) -> Result<f64, MetricsError> {
    check_tokens(tokens, windows)?;
    check_gram_fit(windows, 1)?;
    let values = par::map_collect(&windows.bounds, |b| window_ttr_value(tokens, *b));
    Ok(mean(&values))
}

/// Versioned stopword list. Matching is exact against lowercased tokens.
#[derive(Debug, Clone)]
pub struct StopwordList {
    id: String,
    words: BTreeSet<String>,
}

impl StopwordList {
    /// The embedded English list, id `"en_v1"`.
    pub fn english_v1() -> Self {
        Self::parse("en_v1", include_str!("../data/stopwords_en_v1.txt"))
    }

    pub fn from_file(id: impl Into<String>, path: &std::path::Path) -> std::io::Result<Self> {
        let body = std::fs::read_to_string(path)?;
        Ok(Self::parse(id, &body))
    }

    fn parse(id: impl Into<String>, body: &str) -> Self {
        let words = body
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.to_lowercase())
            .collect();
        Self { id: id.into(), words }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Entropy of one window's stopword-filtered token distribution. `None`
/// when nothing survives the filter. Counting uses an ordered map so the
/// floating-point sum is independent of hasher state.
fn window_entropy_value(
    tokens: &[String],
    bound: (usize, usize),
    stopwords: &StopwordList,
) -> Option<f64> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut total = 0usize;
    for token in &tokens[bound.0..bound.1] {
        if !stopwords.contains(token) {
            *counts.entry(token.as_str()).or_insert(0) += 1;
            total += 1;
        }
    }
    if total == 0 {
        return None;
    }
    let total = total as f64;
    let mut h = 0.0;
    for &count in counts.values() {
        let p = count as f64 / total;
        h -= p * p.log2();
    }
    Some(h)
}

/// Mean per-window Shannon entropy (bits) of the stopword-filtered token
/// distribution. Windows that are pure stopwords are skipped with a
/// warning; if every window is skipped the score is undefined.
pub fn info_density(
    tokens: &[String],
    windows: &WindowSeries,
    stopwords: &StopwordList,
) -> Result<f64, MetricsError> {
    check_tokens(tokens, windows)?;
    check_gram_fit(windows, 1)?;
    let values = par::map_collect(&windows.bounds, |b| window_entropy_value(tokens, *b, stopwords));
    finalize_entropy(&values)
}

/// Entropy of the whole sequence as a single window, for length-sensitive
/// comparisons where window averaging is not wanted.
pub fn info_density_full_text(
    tokens: &[String],
    stopwords: &StopwordList,
) -> Result<f64, MetricsError> {
    if tokens.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    window_entropy_value(tokens, (0, tokens.len()), stopwords).ok_or(MetricsError::AllStopwords)
}

fn finalize_entropy(values: &[Option<f64>]) -> Result<f64, MetricsError> {
    let skipped = values.iter().filter(|v| v.is_none()).count();
    if skipped == values.len() {
        return Err(MetricsError::AllStopwords);
    }
    if skipped > 0 {
        log::warn!("{skipped} of {} windows were all stopwords and were skipped", values.len());
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for v in values.iter().flatten() {
        sum += v;
        count += 1;
    }
    Ok(sum / count as f64)
}

/// Cosine similarity in [-1, 1]. Zero vectors compare as 0.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "cosine over mismatched dimensions");
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}

fn pair_list(count: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(count * (count - 1) / 2);
    for i in 0..count {
        for j in (i + 1)..count {
            pairs.push((i, j));
        }
    }
    pairs
}

/// Mean of `1 - cos` over all unordered pairs. At least two embeddings.
pub fn mean_pairwise_cosine_distance(embeddings: &[Vec<f64>]) -> f64 {
    assert!(embeddings.len() >= 2, "pairwise distance needs at least two embeddings");
    let pairs = pair_list(embeddings.len());
    let values = par::map_collect(&pairs, |(i, j)| {
        1.0 - cosine_similarity(&embeddings[*i], &embeddings[*j])
    });
    mean(&values)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemanticDiv {
    pub value: f64,
    /// True when the text yielded fewer than two windows, making pairwise
    /// divergence meaningless; `value` is 0 in that case.
    pub degenerate: bool,
    pub window_count: usize,
}

/// Mean pairwise cosine distance between embeddings of consecutive
/// non-overlapping token windows. A trailing partial window is kept when
/// it holds at least half a window's tokens. Value is clamped into
/// [0, 2]; fewer than two windows degrade to 0 with a flag.
pub fn semantic_div(
    text: &str,
    embedder: &dyn EmbeddingProvider,
    window_size: usize,
) -> Result<SemanticDiv, MetricsError> {
    if window_size == 0 {
        return Err(MetricsError::InvalidWindowSpec("window_size must be at least 1".into()));
    }
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let chunks = chunk_texts(&tokens, window_size);
    if chunks.len() < 2 {
        return Ok(SemanticDiv { value: 0.0, degenerate: true, window_count: chunks.len() });
    }
    let window_count = chunks.len();
    let embeddings = embedder.embed(&chunks)?;
    if embeddings.len() != window_count {
        return Err(EmbeddingError::Dimension {
            expected: window_count,
            got: embeddings.len(),
        }
        .into());
    }
    crate::embed::check_uniform(&embeddings)?;
    let value = mean_pairwise_cosine_distance(&embeddings).clamp(0.0, 2.0);
    Ok(SemanticDiv { value, degenerate: false, window_count })
}

fn chunk_texts(tokens: &[String], window_size: usize) -> Vec<String> {
    let mut chunks: Vec<String> = Vec::new();
    let mut start = 0;
    while start < tokens.len() {
        let end = (start + window_size).min(tokens.len());
        let len = end - start;
        let is_tail = end == tokens.len() && len < window_size;
        // The first chunk always survives so a short text still forms its
        // single window; only a trailing fragment under half a window is
        // discarded.
        if is_tail && len * 2 < window_size && start > 0 {
            break;
        }
        chunks.push(tokens[start..end].join(" "));
        start = end;
    }
    chunks
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sequential twins of the windowed kernels. Same inputs, same outputs,
/// bit for bit; they exist so benchmarks can compare the rayon path
/// against plain iteration within a single build.
pub mod seq {
    use super::*;

    pub fn distinct_n(
        tokens: &[String],
        n: usize,
        windows: &WindowSeries,
    ) -> Result<f64, MetricsError> {
        check_tokens(tokens, windows)?;
        check_gram_fit(windows, n)?;
        let values =
            par::map_collect_seq(&windows.bounds, |b| window_distinct_value(tokens, *b, n));
        Ok(mean(&values))
    }

    pub fn mattr(tokens: &[String], windows: &WindowSeries) -> Result<f64, MetricsError> {
        check_tokens(tokens, windows)?;
        check_gram_fit(windows, 1)?;
        let values = par::map_collect_seq(&windows.bounds, |b| window_ttr_value(tokens, *b));
        Ok(mean(&values))
    }

    pub fn info_density(
        tokens: &[String],
        windows: &WindowSeries,
        stopwords: &StopwordList,
    ) -> Result<f64, MetricsError> {
        check_tokens(tokens, windows)?;
        check_gram_fit(windows, 1)?;
        let values =
            par::map_collect_seq(&windows.bounds, |b| window_entropy_value(tokens, *b, stopwords));
        finalize_entropy(&values)
    }

    pub fn mean_pairwise_cosine_distance(embeddings: &[Vec<f64>]) -> f64 {
        assert!(embeddings.len() >= 2, "pairwise distance needs at least two embeddings");
        let pairs = pair_list(embeddings.len());
        let values = par::map_collect_seq(&pairs, |(i, j)| {
            1.0 - cosine_similarity(&embeddings[*i], &embeddings[*j])
        });
        mean(&values)
    }
}
