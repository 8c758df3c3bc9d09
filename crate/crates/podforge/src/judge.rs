//! Pairwise LLM judging with position-bias cancellation.
//!
//! A comparison runs twice: A-vs-B and then B-vs-A with the dialogues
//! swapped. Raw scores live in [-3, 3]; the final score per dimension is
//! `(forward - backward) / 2`, so any additive position bias cancels and
//! the result stays in [-3, 3]. The judge must produce its written
//! evidence before its scores, which is enforced on the raw reply text.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::{
    complete_structured, CompletionProvider, CompletionRequest, ProviderError, RetryPolicy,
    SchemaError, StructuredError,
};
use crate::prompt::{self, PromptError, PromptStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JudgeDimension {
    Coherence,
    Engagingness,
    Diversity,
    Informativeness,
    SpeakerDiversity,
    Overall,
}

impl JudgeDimension {
    pub const ALL: [JudgeDimension; 6] = [
        JudgeDimension::Coherence,
        JudgeDimension::Engagingness,
        JudgeDimension::Diversity,
        JudgeDimension::Informativeness,
        JudgeDimension::SpeakerDiversity,
        JudgeDimension::Overall,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            JudgeDimension::Coherence => "coherence",
            JudgeDimension::Engagingness => "engagingness",
            JudgeDimension::Diversity => "diversity",
            JudgeDimension::Informativeness => "informativeness",
            JudgeDimension::SpeakerDiversity => "speaker_diversity",
            JudgeDimension::Overall => "overall",
        }
    }

    /// Human-readable label for report tables.
    pub fn label(&self) -> &'static str {
        match self {
            JudgeDimension::Coherence => "Coherence",
            JudgeDimension::Engagingness => "Engagingness",
            JudgeDimension::Diversity => "Diversity",
            JudgeDimension::Informativeness => "Informativeness",
            JudgeDimension::SpeakerDiversity => "Speaker-diversity",
            JudgeDimension::Overall => "Overall",
        }
    }
}

impl std::fmt::Display for JudgeDimension {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Scores for the fixed dimension set. Unknown keys are rejected so a
/// judge inventing dimensions fails the schema, not silently.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionScores {
    pub coherence: f64,
    pub engagingness: f64,
    pub diversity: f64,
    pub informativeness: f64,
    pub speaker_diversity: f64,
    pub overall: f64,
}

impl DimensionScores {
    pub const ZERO: DimensionScores = DimensionScores {
        coherence: 0.0,
        engagingness: 0.0,
        diversity: 0.0,
        informativeness: 0.0,
        speaker_diversity: 0.0,
        overall: 0.0,
    };

    pub fn get(&self, dim: JudgeDimension) -> f64 {
        match dim {
            JudgeDimension::Coherence => self.coherence,
            JudgeDimension::Engagingness => self.engagingness,
            JudgeDimension::Diversity => self.diversity,
            JudgeDimension::Informativeness => self.informativeness,
            JudgeDimension::SpeakerDiversity => self.speaker_diversity,
            JudgeDimension::Overall => self.overall,
        }
    }

    pub fn set(&mut self, dim: JudgeDimension, value: f64) {
        match dim {
            JudgeDimension::Coherence => self.coherence = value,
            JudgeDimension::Engagingness => self.engagingness = value,
            JudgeDimension::Diversity => self.diversity = value,
            JudgeDimension::Informativeness => self.informativeness = value,
            JudgeDimension::SpeakerDiversity => self.speaker_diversity = value,
            JudgeDimension::Overall => self.overall = value,
        }
    }

    pub fn to_map(&self) -> BTreeMap<String, f64> {
        JudgeDimension::ALL.iter().map(|d| (d.as_str().to_string(), self.get(*d))).collect()
    }

    fn check_range(&self) -> Result<(), JudgeError> {
        for dim in JudgeDimension::ALL {
            let value = self.get(dim);
            if !value.is_finite() || !(-3.0..=3.0).contains(&value) {
                return Err(JudgeError::Range { dimension: dim, value });
            }
        }
        Ok(())
    }
}

/// One direction of a comparison, kept verbatim for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalJudgement {
    pub evidence: String,
    pub scores: DimensionScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    /// `(forward - backward) / 2` per dimension, in [-3, 3]; positive
    /// favors dialogue A.
    pub final_scores: DimensionScores,
    pub forward: DirectionalJudgement,
    pub backward: DirectionalJudgement,
    /// Prompt template id the verdict was produced with.
    pub prompt_id: String,
}

#[derive(Debug, Error)]
pub enum JudgeError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("judge scored {dimension} = {value}, outside [-3, 3]")]
    Range { dimension: JudgeDimension, value: f64 },
    #[error("dialogue {which} is empty")]
    EmptyDialogue { which: char },
}

impl From<StructuredError> for JudgeError {
    fn from(e: StructuredError) -> Self {
        match e {
            StructuredError::Provider(p) => JudgeError::Provider(p),
            StructuredError::Schema(s) => JudgeError::Schema(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeConfig {
    pub model: String,
    pub temperature: f64,
    pub seed: Option<u64>,
    pub retry: RetryPolicy,
}

impl Default for JudgeConfig {
    fn default() -> Self {
        Self { model: "gpt-4".into(), temperature: 0.0, seed: None, retry: RetryPolicy::default() }
    }
}

#[derive(Debug, Deserialize)]
struct JudgeReply {
    evidence: String,
    scores: DimensionScores,
}

/// Runs the swap-averaged comparison of two dialogue texts. Calls are
/// sequential (forward, then backward) so transcripts read in order.
pub fn judge_pair(
    dialogue_a: &str,
    dialogue_b: &str,
    provider: &dyn CompletionProvider,
    prompts: &PromptStore,
    config: &JudgeConfig,
) -> Result<JudgeVerdict, JudgeError> {
    if dialogue_a.trim().is_empty() {
        return Err(JudgeError::EmptyDialogue { which: 'A' });
    }
    if dialogue_b.trim().is_empty() {
        return Err(JudgeError::EmptyDialogue { which: 'B' });
    }
    let prompt_id = prompts.get(prompt::JUDGE_PAIRWISE)?.id();
    let forward = judge_once(dialogue_a, dialogue_b, provider, prompts, config)?;
    let backward = judge_once(dialogue_b, dialogue_a, provider, prompts, config)?;
    let mut final_scores = DimensionScores::ZERO;
    for dim in JudgeDimension::ALL {
        final_scores.set(dim, (forward.scores.get(dim) - backward.scores.get(dim)) / 2.0);
    }
    Ok(JudgeVerdict { final_scores, forward, backward, prompt_id })
}

fn judge_once(
    first: &str,
    second: &str,
    provider: &dyn CompletionProvider,
    prompts: &PromptStore,
    config: &JudgeConfig,
) -> Result<DirectionalJudgement, JudgeError> {
    let text = prompts
        .render(prompt::JUDGE_PAIRWISE, &[("dialogue_a", first), ("dialogue_b", second)])?;
    let request = CompletionRequest::new(&config.model, config.temperature, config.seed)
        .with_user(text);
    let reply: JudgeReply =
        complete_structured(provider, &config.retry, request, |raw, r: &JudgeReply| {
            if r.evidence.trim().is_empty() {
                return Err("evidence is empty".into());
            }
            check_evidence_precedes_scores(raw)
        })?;
    reply.scores.check_range()?;
    Ok(DirectionalJudgement { evidence: reply.evidence, scores: reply.scores })
}

/// The calibration contract: the written evidence must appear before the
/// scores in the raw reply, otherwise the scores were not conditioned on
/// it. Checked on key positions in the raw text.
fn check_evidence_precedes_scores(raw: &str) -> Result<(), String> {
    let evidence_pos = raw.find("\"evidence\"");
    let scores_pos = raw.find("\"scores\"");
    match (evidence_pos, scores_pos) {
        (Some(e), Some(s)) if e < s => Ok(()),
        (Some(_), Some(_)) => Err("evidence must precede scores in the reply".into()),
        (None, _) => Err("reply lacks an evidence key".into()),
        (_, None) => Err("reply lacks a scores key".into()),
    }
}
