//! Conversation-script generation.
//!
//! Three routes produce a [`ConversationScript`]:
//! - [`ScriptEngine::run_episode`]: the host-guest-writer workflow. A host
//!   call invents guest profiles, a second host call drafts an interview
//!   outline, each guest answers in an isolated parallel call (guests never
//!   see each other), and a writer call fuses everything into dialogue.
//! - [`ScriptEngine::direct_baseline_script`]: one fixed-prompt call.
//! - [`ScriptEngine::single_agent_script`]: one call instructed to perform
//!   the profile/outline/script steps itself.
//!
//! Scripts carry their provenance so downstream reports can compare routes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::{
    complete_structured, CompletionProvider, CompletionRequest, ProviderError, RetryPolicy,
    SchemaError, StructuredError,
};
use crate::par;
use crate::prompt::{self, PromptError, PromptStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopicCategory {
    Generic,
    Knowledge,
    CommonSense,
    Counterfactual,
    Other,
}

impl TopicCategory {
    pub const ALL: [TopicCategory; 5] = [
        TopicCategory::Generic,
        TopicCategory::Knowledge,
        TopicCategory::CommonSense,
        TopicCategory::Counterfactual,
        TopicCategory::Other,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TopicCategory::Generic => "generic",
            TopicCategory::Knowledge => "knowledge",
            TopicCategory::CommonSense => "common_sense",
            TopicCategory::Counterfactual => "counterfactual",
            TopicCategory::Other => "other",
        }
    }

    /// Lenient tag parsing for topic files: case-insensitive, `-` and ` `
    /// treated as `_`.
    pub fn parse(tag: &str) -> Option<TopicCategory> {
        let norm = tag.trim().to_lowercase().replace(['-', ' '], "_");
        match norm.as_str() {
            "generic" => Some(TopicCategory::Generic),
            "knowledge" => Some(TopicCategory::Knowledge),
            "common_sense" | "commonsense" => Some(TopicCategory::CommonSense),
            "counterfactual" => Some(TopicCategory::Counterfactual),
            "other" => Some(TopicCategory::Other),
            _ => None,
        }
    }
}

impl Default for TopicCategory {
    fn default() -> Self {
        TopicCategory::Other
    }
}

impl std::fmt::Display for TopicCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    pub id: String,
    #[serde(default)]
    pub category: TopicCategory,
    pub text: String,
}

impl Topic {
    pub fn new(
        id: impl Into<String>,
        category: TopicCategory,
        text: impl Into<String>,
    ) -> Result<Self, ValidationError> {
        let id = id.into().trim().to_string();
        let text = text.into().trim().to_string();
        if id.is_empty() {
            return Err(ValidationError::EmptyField { field: "topic id" });
        }
        if text.is_empty() {
            return Err(ValidationError::EmptyField { field: "topic text" });
        }
        Ok(Self { id, category, text })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatedGender {
    Male,
    Female,
    Unspecified,
}

impl Default for StatedGender {
    fn default() -> Self {
        StatedGender::Unspecified
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuestProfile {
    pub name: String,
    pub expertise: String,
    #[serde(default)]
    pub background: String,
    #[serde(default)]
    pub perspective: String,
    #[serde(default)]
    pub stated_gender: StatedGender,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterviewOutline {
    pub questions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuestResponse {
    pub guest_name: String,
    /// One answer per outline question when an outline was used; free
    /// talking points otherwise.
    pub answers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueLine {
    pub speaker: String,
    pub text: String,
    pub style_instruction: String,
}

/// How a script was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    MultiAgent,
    SingleAgent,
    DirectBaseline,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversationScript {
    pub topic: Topic,
    pub host_name: String,
    pub guests: Vec<GuestProfile>,
    /// None for the baseline routes and outline-free episodes.
    pub outline: Option<InterviewOutline>,
    pub lines: Vec<DialogueLine>,
    pub provenance: Provenance,
}

impl ConversationScript {
    /// Structural invariants. The host opens; every line's speaker is the
    /// host or a listed guest; every guest speaks at least once; no field
    /// is empty; guest names are unique. A host closing line is customary
    /// but only warned about, not required.
    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.host_name.trim().is_empty() {
            return Err(ValidationError::EmptyField { field: "host_name" });
        }
        let mut seen = std::collections::BTreeSet::new();
        for g in &self.guests {
            if g.name.trim().is_empty() {
                return Err(ValidationError::EmptyField { field: "guest name" });
            }
            if g.expertise.trim().is_empty() {
                return Err(ValidationError::EmptyField { field: "guest expertise" });
            }
            if !seen.insert(g.name.as_str()) {
                return Err(ValidationError::DuplicateGuest { name: g.name.clone() });
            }
            if g.name == self.host_name {
                return Err(ValidationError::DuplicateGuest { name: g.name.clone() });
            }
        }
        if let Some(outline) = &self.outline {
            if outline.questions.is_empty() {
                return Err(ValidationError::EmptyField { field: "outline questions" });
            }
        }
        let first = self.lines.first().ok_or(ValidationError::NoLines)?;
        if first.speaker != self.host_name {
            return Err(ValidationError::HostNotFirst { found: first.speaker.clone() });
        }
        for (index, line) in self.lines.iter().enumerate() {
            if line.text.trim().is_empty() {
                return Err(ValidationError::EmptyLine { index, field: "text" });
            }
            if line.style_instruction.trim().is_empty() {
                return Err(ValidationError::EmptyLine { index, field: "style_instruction" });
            }
            let known = line.speaker == self.host_name
                || self.guests.iter().any(|g| g.name == line.speaker);
            if !known {
                return Err(ValidationError::UnknownSpeaker {
                    index,
                    speaker: line.speaker.clone(),
                });
            }
        }
        for g in &self.guests {
            if !self.lines.iter().any(|l| l.speaker == g.name) {
                return Err(ValidationError::SilentGuest { name: g.name.clone() });
            }
        }
        if self.lines.last().map(|l| l.speaker.as_str()) != Some(self.host_name.as_str()) {
            log::warn!(
                "script for topic '{}' does not end with a host line (no closing remarks)",
                self.topic.id
            );
        }
        Ok(())
    }

    /// All speaker names: host first, then guests in cast order.
    pub fn cast(&self) -> Vec<String> {
        let mut cast = Vec::with_capacity(1 + self.guests.len());
        cast.push(self.host_name.clone());
        cast.extend(self.guests.iter().map(|g| g.name.clone()));
        cast
    }

    /// Line texts joined by single spaces, speaker names excluded. This is
    /// the text the quantitative metrics run on.
    pub fn metric_text(&self) -> String {
        let texts: Vec<&str> = self.lines.iter().map(|l| l.text.as_str()).collect();
        texts.join(" ")
    }

    /// `Speaker: text` lines, for pairwise judging.
    pub fn dialogue_text(&self) -> String {
        let lines: Vec<String> =
            self.lines.iter().map(|l| format!("{}: {}", l.speaker, l.text)).collect();
        lines.join("\n")
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ValidationError {
    #[error("{field} must not be empty")]
    EmptyField { field: &'static str },
    #[error("script has no dialogue lines")]
    NoLines,
    #[error("first line must be spoken by the host, found '{found}'")]
    HostNotFirst { found: String },
    #[error("line {index} has an empty {field}")]
    EmptyLine { index: usize, field: &'static str },
    #[error("line {index} is spoken by '{speaker}', who is not in the cast")]
    UnknownSpeaker { index: usize, speaker: String },
    #[error("guest '{name}' never speaks")]
    SilentGuest { name: String },
    #[error("duplicate cast name '{name}'")]
    DuplicateGuest { name: String },
}

/// Stage of [`ScriptEngine::run_episode`] in which an error occurred.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpisodeStage {
    Profiles,
    Outline,
    GuestResponses,
    Compose,
}

impl std::fmt::Display for EpisodeStage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            EpisodeStage::Profiles => "profiles",
            EpisodeStage::Outline => "outline",
            EpisodeStage::GuestResponses => "guest_responses",
            EpisodeStage::Compose => "compose",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("episode stage '{stage}' failed: {source}")]
    Stage {
        stage: EpisodeStage,
        #[source]
        source: Box<ScriptError>,
    },
}

impl From<StructuredError> for ScriptError {
    fn from(e: StructuredError) -> Self {
        match e {
            StructuredError::Provider(p) => ScriptError::Provider(p),
            StructuredError::Schema(s) => ScriptError::Schema(s),
        }
    }
}

impl ScriptError {
    fn at(stage: EpisodeStage) -> impl FnOnce(ScriptError) -> ScriptError {
        move |source| ScriptError::Stage { stage, source: Box::new(source) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptConfig {
    pub model: String,
    pub temperature: f64,
    pub seed: Option<u64>,
    pub host_name: String,
    pub question_count: usize,
    pub min_lines: usize,
    pub max_guests: usize,
    pub retry: RetryPolicy,
}

impl Default for ScriptConfig {
    fn default() -> Self {
        Self {
            model: "gpt-4".into(),
            temperature: 0.7,
            seed: None,
            host_name: "Host".into(),
            question_count: 5,
            min_lines: 8,
            max_guests: 5,
            retry: RetryPolicy::default(),
        }
    }
}

pub struct ScriptEngine<'a> {
    provider: &'a dyn CompletionProvider,
    prompts: &'a PromptStore,
    config: ScriptConfig,
}

#[derive(Debug, Deserialize)]
struct ProfilesReply {
    profiles: Vec<GuestProfile>,
}

#[derive(Debug, Deserialize)]
struct OutlineReply {
    questions: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct AnswersReply {
    answers: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct WriterReply {
    lines: Vec<DialogueLine>,
}

#[derive(Debug, Deserialize)]
struct FullScriptReply {
    host_name: String,
    guests: Vec<GuestProfile>,
    lines: Vec<DialogueLine>,
}

impl<'a> ScriptEngine<'a> {
    pub fn new(
        provider: &'a dyn CompletionProvider,
        prompts: &'a PromptStore,
        config: ScriptConfig,
    ) -> Self {
        Self { provider, prompts, config }
    }

    pub fn config(&self) -> &ScriptConfig {
        &self.config
    }

    fn request(&self, prompt_text: String) -> CompletionRequest {
        CompletionRequest::new(&self.config.model, self.config.temperature, self.config.seed)
            .with_user(prompt_text)
    }

    /// Host call: invent `n_guests` guest profiles for the topic.
    pub fn generate_guest_profiles(
        &self,
        topic: &Topic,
        n_guests: usize,
    ) -> Result<Vec<GuestProfile>, ScriptError> {
        self.check_guest_count(n_guests)?;
        let n_str = n_guests.to_string();
        let text = self.prompts.render(
            prompt::HOST_PROFILES,
            &[("topic", topic.text.as_str()), ("n_guests", n_str.as_str())],
        )?;
        let host_name = self.config.host_name.clone();
        let reply: ProfilesReply = complete_structured(
            self.provider,
            &self.config.retry,
            self.request(text),
            move |_raw, r: &ProfilesReply| validate_profiles(&r.profiles, n_guests, &host_name),
        )?;
        Ok(reply.profiles)
    }

    /// Host call: draft the interview outline.
    pub fn generate_outline(
        &self,
        topic: &Topic,
        profiles: &[GuestProfile],
    ) -> Result<InterviewOutline, ScriptError> {
        let profiles_json = json_compact(profiles);
        let count_str = self.config.question_count.to_string();
        let text = self.prompts.render(
            prompt::HOST_OUTLINE,
            &[
                ("topic", topic.text.as_str()),
                ("profiles", profiles_json.as_str()),
                ("question_count", count_str.as_str()),
            ],
        )?;
        let want = self.config.question_count;
        let reply: OutlineReply = complete_structured(
            self.provider,
            &self.config.retry,
            self.request(text),
            move |_raw, r: &OutlineReply| {
                if r.questions.len() != want {
                    return Err(format!(
                        "count mismatch: expected {want} questions, got {}",
                        r.questions.len()
                    ));
                }
                if r.questions.iter().any(|q| q.trim().is_empty()) {
                    return Err("outline contains an empty question".into());
                }
                Ok(())
            },
        )?;
        Ok(InterviewOutline { questions: reply.questions })
    }

    /// Guest call. The prompt contains only this guest's profile, the
    /// topic, and (when present) the outline; nothing about other guests.
    pub fn generate_guest_response(
        &self,
        topic: &Topic,
        profile: &GuestProfile,
        outline: Option<&InterviewOutline>,
    ) -> Result<GuestResponse, ScriptError> {
        if let Some(o) = outline {
            if o.questions.is_empty() {
                return Err(ScriptError::Precondition("outline must not be empty".into()));
            }
        }
        let profile_json = json_compact(profile);
        let text = match outline {
            Some(o) => {
                let outline_json = json_compact(o);
                self.prompts.render(
                    prompt::GUEST_RESPONSE,
                    &[
                        ("topic", topic.text.as_str()),
                        ("profile", profile_json.as_str()),
                        ("outline", outline_json.as_str()),
                    ],
                )?
            }
            None => self.prompts.render(
                prompt::GUEST_RESPONSE_FREE,
                &[("topic", topic.text.as_str()), ("profile", profile_json.as_str())],
            )?,
        };
        let want = outline.map(|o| o.questions.len());
        let reply: AnswersReply = complete_structured(
            self.provider,
            &self.config.retry,
            self.request(text),
            move |_raw, r: &AnswersReply| {
                match want {
                    Some(n) if r.answers.len() != n => {
                        return Err(format!(
                            "count mismatch: expected {n} answers (one per question), got {}",
                            r.answers.len()
                        ));
                    }
                    None if r.answers.is_empty() => {
                        return Err("expected at least one answer".into());
                    }
                    _ => {}
                }
                if r.answers.iter().any(|a| a.trim().is_empty()) {
                    return Err("answers contain an empty entry".into());
                }
                Ok(())
            },
        )?;
        Ok(GuestResponse { guest_name: profile.name.clone(), answers: reply.answers })
    }

    /// Writer call: fuse profiles, outline, and responses into dialogue.
    pub fn compose_script(
        &self,
        topic: &Topic,
        profiles: &[GuestProfile],
        outline: Option<&InterviewOutline>,
        responses: &[GuestResponse],
    ) -> Result<ConversationScript, ScriptError> {
        if profiles.len() != responses.len() {
            return Err(ScriptError::Precondition(format!(
                "one response per profile required: {} profiles, {} responses",
                profiles.len(),
                responses.len()
            )));
        }
        let profiles_json = json_compact(profiles);
        let outline_json = match outline {
            Some(o) => json_compact(o),
            None => "null".to_string(),
        };
        let responses_json = json_compact(responses);
        let min_lines_str = self.config.min_lines.to_string();
        let text = self.prompts.render(
            prompt::WRITER_COMPOSE,
            &[
                ("topic", topic.text.as_str()),
                ("host_name", self.config.host_name.as_str()),
                ("profiles", profiles_json.as_str()),
                ("outline", outline_json.as_str()),
                ("responses", responses_json.as_str()),
                ("min_lines", min_lines_str.as_str()),
            ],
        )?;
        let reply: WriterReply = complete_structured(
            self.provider,
            &self.config.retry,
            self.request(text),
            |_raw, r: &WriterReply| {
                if r.lines.is_empty() {
                    return Err("script has no lines".into());
                }
                Ok(())
            },
        )?;
        let script = ConversationScript {
            topic: topic.clone(),
            host_name: self.config.host_name.clone(),
            guests: profiles.to_vec(),
            outline: outline.cloned(),
            lines: reply.lines,
            provenance: Provenance::MultiAgent,
        };
        script.validate()?;
        Ok(script)
    }

    /// Whole workflow. Guest calls run in parallel (`parallel` feature);
    /// each guest sees only its own profile.
    pub fn run_episode(
        &self,
        topic: &Topic,
        n_guests: usize,
        use_outline: bool,
    ) -> Result<ConversationScript, ScriptError> {
        self.check_guest_count(n_guests)?;
        let profiles = self
            .generate_guest_profiles(topic, n_guests)
            .map_err(ScriptError::at(EpisodeStage::Profiles))?;
        let outline = if use_outline {
            Some(
                self.generate_outline(topic, &profiles)
                    .map_err(ScriptError::at(EpisodeStage::Outline))?,
            )
        } else {
            None
        };
        let responses = par::try_map_collect(&profiles, |p| {
            self.generate_guest_response(topic, p, outline.as_ref())
        })
        .map_err(ScriptError::at(EpisodeStage::GuestResponses))?;
        self.compose_script(topic, &profiles, outline.as_ref(), &responses)
            .map_err(ScriptError::at(EpisodeStage::Compose))
    }

    /// One-call baseline with a fixed prompt.
    pub fn direct_baseline_script(
        &self,
        topic: &Topic,
        n_guests: usize,
    ) -> Result<ConversationScript, ScriptError> {
        self.check_guest_count(n_guests)?;
        let n_str = n_guests.to_string();
        let text = self.prompts.render(
            prompt::DIRECT_BASELINE,
            &[("topic", topic.text.as_str()), ("n_guests", n_str.as_str())],
        )?;
        self.one_call_script(topic, n_guests, text, Provenance::DirectBaseline)
    }

    /// One-call ablation where a single model performs the profile,
    /// outline, and writing steps itself.
    pub fn single_agent_script(
        &self,
        topic: &Topic,
        n_guests: usize,
    ) -> Result<ConversationScript, ScriptError> {
        self.check_guest_count(n_guests)?;
        let n_str = n_guests.to_string();
        let count_str = self.config.question_count.to_string();
        let text = self.prompts.render(
            prompt::SINGLE_AGENT,
            &[
                ("topic", topic.text.as_str()),
                ("n_guests", n_str.as_str()),
                ("question_count", count_str.as_str()),
            ],
        )?;
        self.one_call_script(topic, n_guests, text, Provenance::SingleAgent)
    }

    fn one_call_script(
        &self,
        topic: &Topic,
        n_guests: usize,
        prompt_text: String,
        provenance: Provenance,
    ) -> Result<ConversationScript, ScriptError> {
        let reply: FullScriptReply = complete_structured(
            self.provider,
            &self.config.retry,
            self.request(prompt_text),
            move |_raw, r: &FullScriptReply| {
                if r.host_name.trim().is_empty() {
                    return Err("host_name is empty".into());
                }
                validate_profiles(&r.guests, n_guests, &r.host_name)?;
                if r.lines.is_empty() {
                    return Err("script has no lines".into());
                }
                Ok(())
            },
        )?;
        let script = ConversationScript {
            topic: topic.clone(),
            host_name: reply.host_name,
            guests: reply.guests,
            outline: None,
            lines: reply.lines,
            provenance,
        };
        script.validate()?;
        Ok(script)
    }

    fn check_guest_count(&self, n_guests: usize) -> Result<(), ScriptError> {
        if n_guests == 0 || n_guests > self.config.max_guests {
            return Err(ScriptError::Precondition(format!(
                "guest count {n_guests} outside 1..={}",
                self.config.max_guests
            )));
        }
        Ok(())
    }
}

fn validate_profiles(
    profiles: &[GuestProfile],
    n_guests: usize,
    host_name: &str,
) -> Result<(), String> {
    if profiles.len() != n_guests {
        return Err(format!(
            "count mismatch: expected {n_guests} guest profiles, got {}",
            profiles.len()
        ));
    }
    let mut seen = std::collections::BTreeSet::new();
    for p in profiles {
        if p.name.trim().is_empty() {
            return Err("guest profile with empty name".into());
        }
        if p.expertise.trim().is_empty() {
            return Err(format!("guest '{}' has empty expertise", p.name));
        }
        if p.name == host_name {
            return Err(format!("guest name '{}' collides with the host", p.name));
        }
        if !seen.insert(p.name.as_str()) {
            return Err(format!("duplicate guest name '{}'", p.name));
        }
    }
    Ok(())
}

/// Single-line JSON for payload interpolation into prompts.
pub(crate) fn json_compact<T: Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string(value).expect("payload types serialize without error")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::mock::{FnProvider, ScriptedProvider};
    use crate::llm::CompletionResponse;

    fn topic() -> Topic {
        Topic::new("t1", TopicCategory::Generic, "How do tides work?").unwrap()
    }

    fn test_config() -> ScriptConfig {
        ScriptConfig { retry: RetryPolicy::immediate(1), ..ScriptConfig::default() }
    }

    fn profile(name: &str) -> GuestProfile {
        GuestProfile {
            name: name.into(),
            expertise: "oceanography".into(),
            background: "research".into(),
            perspective: "evidence first".into(),
            stated_gender: StatedGender::Unspecified,
        }
    }

    fn valid_script() -> ConversationScript {
        ConversationScript {
            topic: topic(),
            host_name: "Host".into(),
            guests: vec![profile("Ada"), profile("Ben")],
            outline: None,
            lines: vec![
                DialogueLine {
                    speaker: "Host".into(),
                    text: "Welcome".into(),
                    style_instruction: "warm".into(),
                },
                DialogueLine {
                    speaker: "Ada".into(),
                    text: "Thanks".into(),
                    style_instruction: "bright".into(),
                },
                DialogueLine {
                    speaker: "Ben".into(),
                    text: "Glad to be here".into(),
                    style_instruction: "calm".into(),
                },
                DialogueLine {
                    speaker: "Host".into(),
                    text: "That is all".into(),
                    style_instruction: "warm".into(),
                },
            ],
            provenance: Provenance::MultiAgent,
        }
    }

    #[test]
    fn validate_accepts_well_formed_script() {
        assert!(valid_script().validate().is_ok());
    }

    #[test]
    fn validate_rejects_non_host_opening() {
        let mut s = valid_script();
        s.lines.swap(0, 1);
        assert!(matches!(s.validate(), Err(ValidationError::HostNotFirst { .. })));
    }

    #[test]
    fn validate_rejects_unknown_speaker() {
        let mut s = valid_script();
        s.lines[2].speaker = "Narrator".into();
        // Ben now never speaks, but the unknown speaker is hit first.
        assert!(matches!(s.validate(), Err(ValidationError::UnknownSpeaker { index: 2, .. })));
    }

    #[test]
    fn validate_rejects_silent_guest() {
        let mut s = valid_script();
        s.lines.remove(2);
        assert_eq!(s.validate(), Err(ValidationError::SilentGuest { name: "Ben".into() }));
    }

    #[test]
    fn metric_text_excludes_speakers() {
        let s = valid_script();
        assert_eq!(s.metric_text(), "Welcome Thanks Glad to be here That is all");
        assert!(s.dialogue_text().starts_with("Host: Welcome\nAda: Thanks"));
    }

    #[test]
    fn profiles_count_mismatch_repairs_then_errors() {
        let one_profile = r#"{"profiles": [{"name": "Ada", "expertise": "x"}]}"#;
        let provider = ScriptedProvider::new(vec![one_profile, one_profile]);
        let prompts = PromptStore::builtin();
        let engine = ScriptEngine::new(&provider, &prompts, test_config());
        let err = engine.generate_guest_profiles(&topic(), 2).unwrap_err();
        assert!(matches!(err, ScriptError::Schema(_)), "got {err:?}");
        assert_eq!(provider.requests().len(), 2);
    }

    #[test]
    fn outline_respects_configured_question_count() {
        let provider = ScriptedProvider::new(vec![r#"{"questions": ["a?", "b?", "c?"]}"#]);
        let prompts = PromptStore::builtin();
        let config = ScriptConfig { question_count: 3, ..test_config() };
        let engine = ScriptEngine::new(&provider, &prompts, config);
        let outline = engine.generate_outline(&topic(), &[profile("Ada")]).unwrap();
        assert_eq!(outline.questions.len(), 3);
        let prompt_text = provider.requests()[0].last_user_content().to_string();
        assert!(prompt_text.contains("exactly 3 sub-questions"));
    }

    #[test]
    fn empty_outline_reply_is_schema_error() {
        let empty = r#"{"questions": []}"#;
        let provider = ScriptedProvider::new(vec![empty, empty]);
        let prompts = PromptStore::builtin();
        let engine = ScriptEngine::new(&provider, &prompts, test_config());
        let err = engine.generate_outline(&topic(), &[profile("Ada")]).unwrap_err();
        assert!(matches!(err, ScriptError::Schema(_)));
    }

    #[test]
    fn guest_prompt_contains_only_own_profile() {
        let provider = FnProvider(|req: &CompletionRequest| {
            let text = req.last_user_content();
            assert!(text.contains("Ada"));
            assert!(!text.contains("Ben"));
            Ok(CompletionResponse { text: r#"{"answers": ["one", "two"]}"#.into() })
        });
        let prompts = PromptStore::builtin();
        let engine = ScriptEngine::new(&provider, &prompts, test_config());
        let outline = InterviewOutline { questions: vec!["q1?".into(), "q2?".into()] };
        let resp =
            engine.generate_guest_response(&topic(), &profile("Ada"), Some(&outline)).unwrap();
        assert_eq!(resp.guest_name, "Ada");
        assert_eq!(resp.answers.len(), 2);
    }

    #[test]
    fn guest_answers_must_match_question_count() {
        let short = r#"{"answers": ["only one"]}"#;
        let provider = ScriptedProvider::new(vec![short, short]);
        let prompts = PromptStore::builtin();
        let engine = ScriptEngine::new(&provider, &prompts, test_config());
        let outline = InterviewOutline { questions: vec!["q1?".into(), "q2?".into()] };
        let err =
            engine.generate_guest_response(&topic(), &profile("Ada"), Some(&outline)).unwrap_err();
        assert!(matches!(err, ScriptError::Schema(_)));
    }

    #[test]
    fn compose_rejects_unknown_speaker_as_validation_error() {
        let reply = r#"{"lines": [
            {"speaker": "Host", "text": "Hello", "style_instruction": "warm"},
            {"speaker": "Narrator", "text": "Meanwhile", "style_instruction": "flat"},
            {"speaker": "Ada", "text": "Hi", "style_instruction": "bright"}
        ]}"#;
        let provider = ScriptedProvider::new(vec![reply]);
        let prompts = PromptStore::builtin();
        let engine = ScriptEngine::new(&provider, &prompts, test_config());
        let responses = vec![GuestResponse { guest_name: "Ada".into(), answers: vec!["a".into()] }];
        let err = engine
            .compose_script(&topic(), &[profile("Ada")], None, &responses)
            .unwrap_err();
        assert!(matches!(err, ScriptError::Validation(ValidationError::UnknownSpeaker { .. })));
    }

    #[test]
    fn missing_style_instruction_is_schema_error_after_repair() {
        let bad = r#"{"lines": [{"speaker": "Host", "text": "Hello"}]}"#;
        let provider = ScriptedProvider::new(vec![bad, bad]);
        let prompts = PromptStore::builtin();
        let engine = ScriptEngine::new(&provider, &prompts, test_config());
        let responses = vec![GuestResponse { guest_name: "Ada".into(), answers: vec!["a".into()] }];
        let err = engine
            .compose_script(&topic(), &[profile("Ada")], None, &responses)
            .unwrap_err();
        assert!(matches!(err, ScriptError::Schema(_)), "got {err:?}");
    }

    #[test]
    fn zero_guests_is_a_precondition_error() {
        let provider = ScriptedProvider::new(Vec::<String>::new());
        let prompts = PromptStore::builtin();
        let engine = ScriptEngine::new(&provider, &prompts, test_config());
        let err = engine.run_episode(&topic(), 0, true).unwrap_err();
        assert!(matches!(err, ScriptError::Precondition(_)));
        assert!(provider.requests().is_empty(), "no call made");
    }

    #[test]
    fn stage_errors_name_the_failing_stage() {
        let provider = ScriptedProvider::new(vec!["junk", "junk"]);
        let prompts = PromptStore::builtin();
        let engine = ScriptEngine::new(&provider, &prompts, test_config());
        let err = engine.run_episode(&topic(), 2, true).unwrap_err();
        match err {
            ScriptError::Stage { stage, .. } => assert_eq!(stage, EpisodeStage::Profiles),
            other => panic!("expected stage error, got {other:?}"),
        }
    }
}
