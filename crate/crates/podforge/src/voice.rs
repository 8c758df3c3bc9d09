//! Reference-voice library and voice-role matching.
//!
//! A library is built from captioned reference recordings. Near-duplicate
//! voices are removed by greedy caption-embedding dedup (first occurrence
//! wins), so the pool stays diverse and a matching model is not flooded
//! with clones. Role assignment is delegated to an LLM and then hard
//! validated: complete coverage, injective, existing ids, compatible
//! genders. One violation triggers one re-prompt naming the violation;
//! a second failure is an error.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::{EmbeddingError, EmbeddingProvider};
use crate::llm::{
    complete_structured, ChatMessage, CompletionProvider, CompletionRequest, ProviderError,
    RetryPolicy, SchemaError, StructuredError,
};
use crate::metrics::cosine_similarity;
use crate::prompt::{self, PromptError, PromptStore};
use crate::script::{json_compact, GuestProfile, InterviewOutline, StatedGender};

pub const DEFAULT_DEDUP_THRESHOLD: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoiceGender {
    Male,
    Female,
    Unknown,
}

impl Default for VoiceGender {
    fn default() -> Self {
        VoiceGender::Unknown
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoiceLanguage {
    En,
    Zh,
    Other,
}

impl Default for VoiceLanguage {
    fn default() -> Self {
        VoiceLanguage::En
    }
}

/// One reference voice: a recording plus a caption describing how it
/// sounds. `audio_path` is kept as written in the library file; relative
/// paths resolve against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoiceEntry {
    pub voice_id: String,
    pub speaker_id: String,
    #[serde(default)]
    pub gender: VoiceGender,
    pub caption: String,
    pub audio_path: PathBuf,
    #[serde(default)]
    pub language: VoiceLanguage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoiceLibrary {
    entries: Vec<VoiceEntry>,
    dedup_threshold: f64,
}

#[derive(Debug, Error)]
pub enum VoiceError {
    #[error("no voice entries supplied")]
    EmptyInput,
    #[error("dedup threshold {0} outside (0, 1]")]
    InvalidThreshold(f64),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("library file {path} is not a JSON array of voice entries: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("library invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("voice library has {have} voices but the cast needs {need}")]
    LibraryTooSmall { need: usize, have: usize },
    #[error("voice assignment still invalid after re-prompt: {0}")]
    MatchValidation(String),
}

impl From<StructuredError> for VoiceError {
    fn from(e: StructuredError) -> Self {
        match e {
            StructuredError::Provider(p) => VoiceError::Provider(p),
            StructuredError::Schema(s) => VoiceError::Schema(s),
        }
    }
}

impl VoiceLibrary {
    pub fn entries(&self) -> &[VoiceEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dedup_threshold(&self) -> f64 {
        self.dedup_threshold
    }

    pub fn get(&self, voice_id: &str) -> Option<&VoiceEntry> {
        self.entries.iter().find(|e| e.voice_id == voice_id)
    }
}

/// Greedy caption dedup: entries are scanned in input order and one is
/// kept only if its caption embedding stays below `threshold` cosine
/// against every earlier entry, kept or dropped. Comparing against all
/// earlier entries (not just kept ones) makes the kept set grow
/// monotonically with the threshold; the first entry is always kept.
pub fn build_voice_library(
    raw_entries: &[VoiceEntry],
    embedder: &dyn EmbeddingProvider,
    threshold: f64,
) -> Result<VoiceLibrary, VoiceError> {
    if raw_entries.is_empty() {
        return Err(VoiceError::EmptyInput);
    }
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(VoiceError::InvalidThreshold(threshold));
    }
    check_structure(raw_entries)?;
    let captions: Vec<String> = raw_entries.iter().map(|e| e.caption.clone()).collect();
    let embeddings = embedder.embed(&captions)?;
    if embeddings.len() != raw_entries.len() {
        return Err(EmbeddingError::Dimension {
            expected: raw_entries.len(),
            got: embeddings.len(),
        }
        .into());
    }
    let mut kept: Vec<VoiceEntry> = Vec::new();
    for (i, (entry, embedding)) in raw_entries.iter().zip(&embeddings).enumerate() {
        let duplicate = embeddings[..i]
            .iter()
            .any(|earlier| cosine_similarity(earlier, embedding) >= threshold);
        if duplicate {
            log::info!("voice '{}' dropped as a caption near-duplicate", entry.voice_id);
        } else {
            kept.push(entry.clone());
        }
    }
    Ok(VoiceLibrary { entries: kept, dedup_threshold: threshold })
}

/// Structural invariants shared by raw manifests and saved libraries:
/// unique non-empty voice ids, non-empty captions.
fn check_structure(entries: &[VoiceEntry]) -> Result<(), VoiceError> {
    let mut ids = BTreeSet::new();
    for e in entries {
        if e.voice_id.trim().is_empty() {
            return Err(VoiceError::Invariant("voice entry with empty voice_id".into()));
        }
        if e.caption.trim().is_empty() {
            return Err(VoiceError::Invariant(format!(
                "voice '{}' has an empty caption",
                e.voice_id
            )));
        }
        if !ids.insert(e.voice_id.as_str()) {
            return Err(VoiceError::Invariant(format!("duplicate voice_id '{}'", e.voice_id)));
        }
    }
    Ok(())
}

/// Resolves an entry's audio path against the library file's directory.
pub fn resolve_audio_path(library_path: &Path, entry: &VoiceEntry) -> PathBuf {
    if entry.audio_path.is_absolute() {
        entry.audio_path.clone()
    } else {
        library_path.parent().unwrap_or(Path::new(".")).join(&entry.audio_path)
    }
}

/// Reads a JSON array of [`VoiceEntry`] records without invariant checks
/// beyond parseability, for ingestion manifests that may still contain
/// duplicates.
pub fn load_entries(path: &Path) -> Result<Vec<VoiceEntry>, VoiceError> {
    let body = std::fs::read_to_string(path)
        .map_err(|source| VoiceError::Io { path: path.to_path_buf(), source })?;
    serde_json::from_str(&body)
        .map_err(|e| VoiceError::Format { path: path.to_path_buf(), reason: e.to_string() })
}

/// Loads a saved library and re-validates its structural invariants,
/// including that every referenced audio file exists.
pub fn load_library(path: &Path) -> Result<VoiceLibrary, VoiceError> {
    let entries = load_entries(path)?;
    if entries.is_empty() {
        return Err(VoiceError::Invariant(format!("library {} is empty", path.display())));
    }
    check_structure(&entries)?;
    for entry in &entries {
        let audio = resolve_audio_path(path, entry);
        if !audio.is_file() {
            return Err(VoiceError::Invariant(format!(
                "voice '{}' references missing audio file {}",
                entry.voice_id,
                audio.display()
            )));
        }
    }
    Ok(VoiceLibrary { entries, dedup_threshold: DEFAULT_DEDUP_THRESHOLD })
}

/// Writes the library as a JSON array of entries (UTF-8, pretty-printed).
/// The dedup threshold is a build-time parameter and is not persisted.
pub fn save_library(library: &VoiceLibrary, path: &Path) -> Result<(), VoiceError> {
    let body = serde_json::to_string_pretty(&library.entries).expect("entries serialize");
    std::fs::write(path, body)
        .map_err(|source| VoiceError::Io { path: path.to_path_buf(), source })
}

/// Caption keyword heuristic for manifests that omit gender.
pub fn infer_gender_from_caption(caption: &str) -> VoiceGender {
    const FEMALE: &[&str] = &["female", "woman", "girl", "lady", "she", "her", "actress"];
    const MALE: &[&str] = &["male", "man", "boy", "gentleman", "he", "his", "actor"];
    for token in crate::metrics::tokenize(caption) {
        if FEMALE.contains(&token.as_str()) {
            return VoiceGender::Female;
        }
        if MALE.contains(&token.as_str()) {
            return VoiceGender::Male;
        }
    }
    VoiceGender::Unknown
}

/// A total role -> voice_id mapping over a cast.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleVoiceAssignment {
    pub assignments: BTreeMap<String, String>,
}

impl RoleVoiceAssignment {
    pub fn voice_for(&self, role: &str) -> Option<&str> {
        self.assignments.get(role).map(String::as_str)
    }
}

/// One castable role, as shown to the matching model.
#[derive(Debug, Clone, Serialize)]
struct RoleCard<'a> {
    role: &'a str,
    description: &'a str,
    stated_gender: StatedGender,
}

#[derive(Debug, Clone, Serialize)]
struct LibraryCard<'a> {
    voice_id: &'a str,
    gender: VoiceGender,
    caption: &'a str,
}

#[derive(Debug, Deserialize)]
struct MatchReply {
    assignments: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub model: String,
    pub temperature: f64,
    pub seed: Option<u64>,
    pub retry: RetryPolicy,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self { model: "gpt-4".into(), temperature: 0.2, seed: None, retry: RetryPolicy::default() }
    }
}

/// Asks the model to cast every role (host plus each guest), validates the
/// result, and re-prompts once with the concrete violation before failing.
#[allow(clippy::too_many_arguments)]
pub fn match_voices(
    library: &VoiceLibrary,
    host_name: &str,
    host_descriptor: &str,
    profiles: &[GuestProfile],
    outline: Option<&InterviewOutline>,
    provider: &dyn CompletionProvider,
    prompts: &PromptStore,
    config: &MatchConfig,
) -> Result<RoleVoiceAssignment, VoiceError> {
    let need = profiles.len() + 1;
    if library.len() < need {
        return Err(VoiceError::LibraryTooSmall { need, have: library.len() });
    }
    let mut roles: Vec<RoleCard> = Vec::with_capacity(need);
    roles.push(RoleCard {
        role: host_name,
        description: host_descriptor,
        stated_gender: StatedGender::Unspecified,
    });
    for p in profiles {
        roles.push(RoleCard { role: &p.name, description: &p.expertise, stated_gender: p.stated_gender });
    }
    let roles_json = json_compact(&roles);
    let library_cards: Vec<LibraryCard> = library
        .entries
        .iter()
        .map(|e| LibraryCard { voice_id: &e.voice_id, gender: e.gender, caption: &e.caption })
        .collect();
    let library_json = json_compact(&library_cards);
    let outline_json = match outline {
        Some(o) => json_compact(o),
        None => "null".to_string(),
    };
    let text = prompts.render(
        prompt::VOICE_MATCH,
        &[
            ("roles", roles_json.as_str()),
            ("library", library_json.as_str()),
            ("outline", outline_json.as_str()),
        ],
    )?;
    let mut request =
        CompletionRequest::new(&config.model, config.temperature, config.seed).with_user(text);

    let reply: MatchReply =
        complete_structured(provider, &config.retry, request.clone(), |_raw, r: &MatchReply| {
            if r.assignments.is_empty() {
                return Err("assignments map is empty".into());
            }
            Ok(())
        })?;

    let expected_roles: Vec<&str> =
        std::iter::once(host_name).chain(profiles.iter().map(|p| p.name.as_str())).collect();
    match validate_assignment(&reply.assignments, &expected_roles, profiles, library) {
        Ok(()) => Ok(RoleVoiceAssignment { assignments: reply.assignments }),
        Err(violation) => {
            log::warn!("voice assignment rejected, re-prompting once: {violation}");
            request.messages.push(ChatMessage::assistant(json_compact(&serde_json::json!({
                "assignments": reply.assignments
            }))));
            request.messages.push(ChatMessage::user(format!(
                "That assignment is invalid: {violation}. \
                 Produce a corrected assignment that satisfies every rule. \
                 Respond with only the JSON object."
            )));
            let retried: MatchReply =
                complete_structured(provider, &config.retry, request, |_raw, r: &MatchReply| {
                    if r.assignments.is_empty() {
                        return Err("assignments map is empty".into());
                    }
                    Ok(())
                })?;
            validate_assignment(&retried.assignments, &expected_roles, profiles, library)
                .map_err(VoiceError::MatchValidation)?;
            Ok(RoleVoiceAssignment { assignments: retried.assignments })
        }
    }
}

/// Checks coverage, id existence, injectivity, and gender compatibility.
/// Returns a human-readable violation for the re-prompt on failure.
pub fn validate_assignment(
    assignments: &BTreeMap<String, String>,
    expected_roles: &[&str],
    profiles: &[GuestProfile],
    library: &VoiceLibrary,
) -> Result<(), String> {
    for role in expected_roles {
        if !assignments.contains_key(*role) {
            return Err(format!("role '{role}' has no voice assigned"));
        }
    }
    for role in assignments.keys() {
        if !expected_roles.contains(&role.as_str()) {
            return Err(format!("'{role}' is not a role in this cast"));
        }
    }
    let mut used: BTreeMap<&str, &str> = BTreeMap::new();
    for (role, voice_id) in assignments {
        let Some(entry) = library.get(voice_id) else {
            return Err(format!("voice_id '{voice_id}' (role '{role}') is not in the library"));
        };
        if let Some(previous) = used.insert(voice_id.as_str(), role.as_str()) {
            return Err(format!(
                "voice_id '{voice_id}' is assigned to both '{previous}' and '{role}'"
            ));
        }
        let stated = profiles
            .iter()
            .find(|p| p.name == *role)
            .map(|p| p.stated_gender)
            .unwrap_or(StatedGender::Unspecified);
        let compatible = match (stated, entry.gender) {
            (StatedGender::Unspecified, _) => true,
            (_, VoiceGender::Unknown) => true,
            (StatedGender::Male, VoiceGender::Male) => true,
            (StatedGender::Female, VoiceGender::Female) => true,
            _ => false,
        };
        if !compatible {
            return Err(format!(
                "role '{role}' states gender {:?} but voice '{voice_id}' is {:?}",
                stated, entry.gender
            ));
        }
    }
    Ok(())
}
