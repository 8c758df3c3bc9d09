//! Automated audio-program production pipeline.
//!
//! The crate turns a discussion topic into a finished podcast-style audio
//! program in five stages, each usable on its own:
//!
//! 1. [`script`]: a host/guest/writer multi-agent workflow (plus two
//!    single-call baselines) that produces a speaker-attributed
//!    conversation script over an abstract completion provider.
//! 2. [`voice`]: a deduplicated, captioned reference-voice library and
//!    LLM-assisted voice-role matching with hard validation.
//! 3. [`audioplan`]: enrichment of a conversation script into a renderable
//!    audio script with background music and sound-effect spans.
//! 4. [`synth`] + [`mixer`]: instruction-following TTS / text-to-audio
//!    adapters and deterministic sample-accurate assembly of the program.
//! 5. [`metrics`], [`eval`] and [`judge`]: reference-free text metrics
//!    with sliding-window normalization, difference scoring, and a
//!    swap-averaged pairwise LLM judge.
//!
//! All model inference is external: LLM, TTS, and text-to-audio backends
//! are reached through provider traits ([`llm::CompletionProvider`],
//! [`synth::TtsProvider`], [`synth::TtaProvider`],
//! [`voice::EmbeddingProvider`]). The [`offline`] module ships canned
//! deterministic providers so the whole pipeline runs without network
//! access.
//!
//! With the `parallel` feature (on by default) the data-parallel inner
//! loops (metric windows, guest fan-out, per-item synthesis) run on
//! rayon; without it everything runs sequentially. Outputs are
//! bit-identical in both modes.

pub mod audioplan;
pub mod embed;
pub mod eval;
pub mod judge;
pub mod llm;
pub mod metrics;
pub mod mixer;
pub mod offline;
pub mod prompt;
pub mod resample;
pub mod script;
pub mod synth;
pub mod voice;
pub mod wav;

mod par;
mod stablehash;

pub use llm::{ChatMessage, CompletionProvider, CompletionRequest, CompletionResponse};
pub use script::{ConversationScript, DialogueLine, GuestProfile, InterviewOutline, Topic};
pub use synth::AudioClip;
pub use voice::{RoleVoiceAssignment, VoiceEntry, VoiceLibrary};
