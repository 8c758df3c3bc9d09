//! Audio-script enrichment: turning a conversation script into a complete
//! render plan. Every dialogue line becomes one foreground speech item in
//! order; an LLM proposes background music and sound-effect spans, which
//! are clamped into range and gain limits before they enter the plan.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::{
    complete_structured, CompletionProvider, CompletionRequest, ProviderError, RetryPolicy,
    SchemaError, StructuredError,
};
use crate::prompt::{self, PromptError, PromptStore};
use crate::script::{json_compact, ConversationScript};
use crate::voice::RoleVoiceAssignment;

pub const DEFAULT_BACKGROUND_GAIN_DB: f64 = -18.0;
pub const MIN_GAIN_DB: f64 = -40.0;
pub const MAX_GAIN_DB: f64 = 0.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AudioKind {
    Speech,
    Music,
    SoundEffect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AudioLayer {
    Foreground,
    Background,
}

/// One renderable item. Speech items carry the line's text, speaker, and
/// style instruction; background items carry a description and the
/// inclusive span of line indexes they play under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioItem {
    pub kind: AudioKind,
    pub layer: AudioLayer,
    /// Spoken text for speech, generator description otherwise.
    pub content: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub speaker: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub style_instruction: Option<String>,
    /// Inclusive (start_line, end_line) for background items.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub span: Option<(usize, usize)>,
    pub gain_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioScript {
    pub script: ConversationScript,
    pub assignment: RoleVoiceAssignment,
    pub items: Vec<AudioItem>,
}

impl AudioScript {
    pub fn foreground_items(&self) -> impl Iterator<Item = (usize, &AudioItem)> {
        self.items.iter().enumerate().filter(|(_, i)| i.layer == AudioLayer::Foreground)
    }

    pub fn background_items(&self) -> impl Iterator<Item = (usize, &AudioItem)> {
        self.items.iter().enumerate().filter(|(_, i)| i.layer == AudioLayer::Background)
    }
}

/// One broken plan rule, addressed by item index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub item_index: usize,
    pub rule: PlanRule,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanRule {
    SpeechMirrorsLines,
    SpeechFieldsPresent,
    SpeechIsForeground,
    SpeakerAssigned,
    BackgroundSpanValid,
    GainInRange,
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("speaker '{0}' has no assigned voice")]
    AssignmentIncomplete(String),
    #[error("enrichment proposal invalid: {0}")]
    Validation(String),
}

impl From<StructuredError> for PlanError {
    fn from(e: StructuredError) -> Self {
        match e {
            StructuredError::Provider(p) => PlanError::Provider(p),
            StructuredError::Schema(s) => PlanError::Schema(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ProposedKind {
    Music,
    SoundEffect,
}

#[derive(Debug, Deserialize)]
struct ProposedBackground {
    kind: ProposedKind,
    description: String,
    start_line: usize,
    end_line: usize,
    #[serde(default)]
    gain_db: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct EnrichReply {
    background: Vec<ProposedBackground>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrichConfig {
    pub model: String,
    pub temperature: f64,
    pub seed: Option<u64>,
    pub retry: RetryPolicy,
}

impl Default for EnrichConfig {
    fn default() -> Self {
        Self { model: "gpt-4".into(), temperature: 0.4, seed: None, retry: RetryPolicy::default() }
    }
}

/// Builds the audio script: speech items mirror the dialogue lines one to
/// one, then LLM-proposed background spans are sanitized and appended.
/// Span indexes are clamped into range (with a warning); an inverted span
/// is rejected; out-of-range gains are clamped to the allowed window.
pub fn enrich_to_audio_script(
    script: &ConversationScript,
    assignment: &RoleVoiceAssignment,
    provider: &dyn CompletionProvider,
    prompts: &PromptStore,
    config: &EnrichConfig,
) -> Result<AudioScript, PlanError> {
    for line in &script.lines {
        if assignment.voice_for(&line.speaker).is_none() {
            return Err(PlanError::AssignmentIncomplete(line.speaker.clone()));
        }
    }
    let line_count = script.lines.len();
    let script_json = json_compact(&script.lines);
    let line_count_str = line_count.to_string();
    let max_line_str = (line_count - 1).to_string();
    let text = prompts.render(
        prompt::AUDIO_ENRICH,
        &[
            ("script", script_json.as_str()),
            ("line_count", line_count_str.as_str()),
            ("max_line", max_line_str.as_str()),
        ],
    )?;
    let request =
        CompletionRequest::new(&config.model, config.temperature, config.seed).with_user(text);
    let reply: EnrichReply =
        complete_structured(provider, &config.retry, request, |_raw, r: &EnrichReply| {
            if r.background.iter().any(|b| b.description.trim().is_empty()) {
                return Err("background item with empty description".into());
            }
            Ok(())
        })?;

    let mut items: Vec<AudioItem> = script
        .lines
        .iter()
        .map(|line| AudioItem {
            kind: AudioKind::Speech,
            layer: AudioLayer::Foreground,
            content: line.text.clone(),
            speaker: Some(line.speaker.clone()),
            style_instruction: Some(line.style_instruction.clone()),
            span: None,
            gain_db: 0.0,
        })
        .collect();

    for proposal in reply.background {
        if proposal.start_line > proposal.end_line {
            return Err(PlanError::Validation(format!(
                "inverted span ({}, {}) for '{}'",
                proposal.start_line, proposal.end_line, proposal.description
            )));
        }
        let start = proposal.start_line.min(line_count - 1);
        let end = proposal.end_line.min(line_count - 1);
        if (start, end) != (proposal.start_line, proposal.end_line) {
            log::warn!(
                "background span ({}, {}) clamped to ({start}, {end})",
                proposal.start_line,
                proposal.end_line
            );
        }
        let proposed_gain = proposal.gain_db.unwrap_or(DEFAULT_BACKGROUND_GAIN_DB);
        let gain_db = proposed_gain.clamp(MIN_GAIN_DB, MAX_GAIN_DB);
        if gain_db != proposed_gain {
            log::warn!("background gain {proposed_gain} dB clamped to {gain_db} dB");
        }
        items.push(AudioItem {
            kind: match proposal.kind {
                ProposedKind::Music => AudioKind::Music,
                ProposedKind::SoundEffect => AudioKind::SoundEffect,
            },
            layer: AudioLayer::Background,
            content: proposal.description,
            speaker: None,
            style_instruction: None,
            span: Some((start, end)),
            gain_db,
        });
    }

    let audio_script =
        AudioScript { script: script.clone(), assignment: assignment.clone(), items };
    let violations = validate_audio_script(&audio_script);
    if let Some(first) = violations.first() {
        return Err(PlanError::Validation(format!(
            "{} violations, first at item {}: {}",
            violations.len(),
            first.item_index,
            first.detail
        )));
    }
    Ok(audio_script)
}

/// Full rule check over an audio script. Construction via
/// [`enrich_to_audio_script`] always yields an empty list; the check
/// exists for plans loaded from disk or built by hand.
pub fn validate_audio_script(audio_script: &AudioScript) -> Vec<Violation> {
    let mut violations = Vec::new();
    let script = &audio_script.script;
    let line_count = script.lines.len();
    let speech: Vec<(usize, &AudioItem)> = audio_script
        .items
        .iter()
        .enumerate()
        .filter(|(_, i)| i.kind == AudioKind::Speech)
        .collect();

    if speech.len() != line_count {
        violations.push(Violation {
            item_index: 0,
            rule: PlanRule::SpeechMirrorsLines,
            detail: format!("{} speech items for {line_count} lines", speech.len()),
        });
    }
    for (line_index, (item_index, item)) in speech.iter().enumerate() {
        if item.layer != AudioLayer::Foreground {
            violations.push(Violation {
                item_index: *item_index,
                rule: PlanRule::SpeechIsForeground,
                detail: "speech item placed in the background layer".into(),
            });
        }
        let (Some(speaker), Some(style)) = (&item.speaker, &item.style_instruction) else {
            violations.push(Violation {
                item_index: *item_index,
                rule: PlanRule::SpeechFieldsPresent,
                detail: "speech item missing speaker or style_instruction".into(),
            });
            continue;
        };
        if style.trim().is_empty() {
            violations.push(Violation {
                item_index: *item_index,
                rule: PlanRule::SpeechFieldsPresent,
                detail: "speech item with empty style_instruction".into(),
            });
        }
        if let Some(line) = script.lines.get(line_index) {
            if line.text != item.content || line.speaker != *speaker {
                violations.push(Violation {
                    item_index: *item_index,
                    rule: PlanRule::SpeechMirrorsLines,
                    detail: format!("speech item diverges from line {line_index}"),
                });
            }
        }
        if audio_script.assignment.voice_for(speaker).is_none() {
            violations.push(Violation {
                item_index: *item_index,
                rule: PlanRule::SpeakerAssigned,
                detail: format!("speaker '{speaker}' has no assigned voice"),
            });
        }
    }
    for (item_index, item) in audio_script.items.iter().enumerate() {
        if item.kind == AudioKind::Speech {
            continue;
        }
        match item.span {
            None => violations.push(Violation {
                item_index,
                rule: PlanRule::BackgroundSpanValid,
                detail: "background item without a span".into(),
            }),
            Some((start, end)) => {
                if start > end || end >= line_count {
                    violations.push(Violation {
                        item_index,
                        rule: PlanRule::BackgroundSpanValid,
                        detail: format!("span ({start}, {end}) invalid for {line_count} lines"),
                    });
                }
            }
        }
        if item.layer != AudioLayer::Background {
            violations.push(Violation {
                item_index,
                rule: PlanRule::SpeechIsForeground,
                detail: "non-speech item placed in the foreground layer".into(),
            });
        }
    }
    for (item_index, item) in audio_script.items.iter().enumerate() {
        if !(MIN_GAIN_DB..=MAX_GAIN_DB).contains(&item.gain_db) {
            violations.push(Violation {
                item_index,
                rule: PlanRule::GainInRange,
                detail: format!("gain {} dB outside [{MIN_GAIN_DB}, {MAX_GAIN_DB}]", item.gain_db),
            });
        }
    }
    violations
}
