//! Run-directory orchestration. Each topic owns one directory under the
//! output root; every pipeline stage persists exactly one artifact there
//! and is skipped on rerun when its artifact already exists. Completed
//! stage files are never rewritten; a run directory can only be resumed
//! under the byte-identical config snapshot it was created with.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use podforge::audioplan::{self, AudioScript, EnrichConfig};
use podforge::eval::{compute_report, MetricConfig, MetricReport};
use podforge::metrics::StopwordList;
use podforge::mixer::{self, Timeline};
use podforge::script::{ConversationScript, ScriptConfig, ScriptEngine, Topic};
use podforge::synth::{AudioClip, Synthesizer};
use podforge::voice::{
    self, load_library, resolve_audio_path, MatchConfig, RoleVoiceAssignment, VoiceLibrary,
};
use podforge::prompt::PromptStore;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, RunMode};
use crate::error::CliError;
use crate::par;
use crate::providers::Providers;

/// Artifact names inside a run directory.
pub mod files {
    pub const CONFIG_SNAPSHOT: &str = "config_snapshot.yaml";
    pub const CONFIG_SHA256: &str = "config_sha256";
    pub const CONVERSATION_SCRIPT: &str = "conversation_script.json";
    pub const ASSIGNMENT: &str = "assignment.json";
    pub const AUDIO_SCRIPT: &str = "audio_script.json";
    pub const TIMELINE: &str = "timeline.json";
    pub const FINAL_WAV: &str = "final.wav";
    pub const METRICS: &str = "metrics.json";
    pub const RUN_LOG: &str = "run.log";
}

const HOST_DESCRIPTOR: &str = "Warm, articulate program host who steers the conversation";

/// `metrics.json` body: the report plus the snapshot hash of the config
/// that produced it.
#[derive(Debug, Serialize, Deserialize)]
pub struct MetricsArtifact {
    pub config_sha256: String,
    pub report: MetricReport,
}

pub struct VoicePool {
    pub path: PathBuf,
    pub library: VoiceLibrary,
}

impl VoicePool {
    pub fn load(path: &Path) -> Result<VoicePool, CliError> {
        let library = load_library(path)
            .map_err(|e| CliError::usage(format!("voice library {}: {e}", path.display())))?;
        Ok(VoicePool { path: path.to_path_buf(), library })
    }
}

pub struct Runner<'a> {
    pub config: &'a RunConfig,
    pub providers: &'a Providers,
    pub prompts: PromptStore,
    pub out_root: &'a Path,
    pub voices: Option<VoicePool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunDepth {
    /// Conversation script only.
    ScriptOnly,
    /// Script, casting, enrichment, synthesis, mix, metrics.
    Full,
}

impl<'a> Runner<'a> {
    pub fn new(
        config: &'a RunConfig,
        providers: &'a Providers,
        out_root: &'a Path,
        voices: Option<VoicePool>,
    ) -> Self {
        Self { config, providers, prompts: PromptStore::builtin(), out_root, voices }
    }

    fn script_config(&self) -> ScriptConfig {
        ScriptConfig {
            model: self.config.model.clone(),
            temperature: self.config.temperature,
            seed: self.config.seed,
            ..ScriptConfig::default()
        }
    }

    fn match_config(&self) -> MatchConfig {
        MatchConfig {
            model: self.config.model.clone(),
            seed: self.config.seed,
            ..MatchConfig::default()
        }
    }

    fn enrich_config(&self) -> EnrichConfig {
        EnrichConfig {
            model: self.config.model.clone(),
            seed: self.config.seed,
            ..EnrichConfig::default()
        }
    }

    pub fn metric_config(&self) -> MetricConfig {
        MetricConfig {
            window_size: self.config.window_size,
            stride: self.config.stride,
            info_density_full_text: self.config.info_density_full_text,
            ..MetricConfig::standard(self.providers.embedder.id())
        }
    }

    /// Creates the run directory and pins the config snapshot. An existing
    /// directory must carry the byte-identical snapshot; anything else is
    /// a refusal, not a silent overwrite.
    pub fn prepare_run_dir(&self, topic: &Topic) -> Result<PathBuf, CliError> {
        let dir = self.out_root.join(&topic.id);
        std::fs::create_dir_all(&dir)
            .map_err(|e| CliError::usage(format!("creating {}: {e}", dir.display())))?;
        let yaml = self.config.snapshot_yaml();
        let hash = self.config.sha256_hex();

        let snapshot_path = dir.join(files::CONFIG_SNAPSHOT);
        if snapshot_path.exists() {
            let existing = std::fs::read_to_string(&snapshot_path)
                .map_err(|e| CliError::usage(format!("{}: {e}", snapshot_path.display())))?;
            if existing != yaml {
                return Err(CliError::usage(format!(
                    "run directory {} was created under a different config; \
                     resume with the original config or choose a fresh --out",
                    dir.display()
                )));
            }
        } else {
            std::fs::write(&snapshot_path, &yaml)
                .map_err(|e| CliError::usage(format!("{}: {e}", snapshot_path.display())))?;
        }

        let hash_path = dir.join(files::CONFIG_SHA256);
        if hash_path.exists() {
            let existing = std::fs::read_to_string(&hash_path)
                .map_err(|e| CliError::usage(format!("{}: {e}", hash_path.display())))?;
            if existing.trim() != hash {
                return Err(CliError::usage(format!(
                    "{} does not match the config snapshot; the run directory is corrupted",
                    hash_path.display()
                )));
            }
        } else {
            std::fs::write(&hash_path, format!("{hash}\n"))
                .map_err(|e| CliError::usage(format!("{}: {e}", hash_path.display())))?;
        }
        Ok(dir)
    }

    pub fn run_topic(&self, topic: &Topic, dir: &Path, depth: RunDepth) -> Result<(), CliError> {
        let script = self.stage_script(dir, topic)?;
        if depth == RunDepth::ScriptOnly {
            return Ok(());
        }
        let assignment = self.stage_match(dir, &script)?;
        let audio_script = self.stage_enrich(dir, &script, &assignment)?;
        self.stage_mix(dir, &audio_script)?;
        self.stage_metrics(dir, &script)?;
        Ok(())
    }

    fn stage_script(&self, dir: &Path, topic: &Topic) -> Result<ConversationScript, CliError> {
        let stage = "script";
        let path = dir.join(files::CONVERSATION_SCRIPT);
        let started = Instant::now();
        if path.exists() {
            let script: ConversationScript = read_json(stage, &path)?;
            script.validate().map_err(|e| {
                CliError::stage(stage, format!("persisted {} is invalid: {e}", path.display()))
            })?;
            if script.topic.id != topic.id {
                return Err(CliError::stage(
                    stage,
                    format!(
                        "persisted script is for topic '{}', run directory belongs to '{}'",
                        script.topic.id, topic.id
                    ),
                ));
            }
            log_stage(dir, stage, "reused", started.elapsed().as_millis());
            return Ok(script);
        }
        let engine = ScriptEngine::new(&*self.providers.llm, &self.prompts, self.script_config());
        let result = match self.config.mode {
            RunMode::MultiAgent => {
                engine.run_episode(topic, self.config.n_guests, self.config.use_outline)
            }
            RunMode::SingleAgent => engine.single_agent_script(topic, self.config.n_guests),
            RunMode::DirectBaseline => engine.direct_baseline_script(topic, self.config.n_guests),
        };
        let script = result.map_err(|e| {
            log_stage(dir, stage, "failed", started.elapsed().as_millis());
            CliError::stage(stage, e)
        })?;
        write_json(stage, &path, &script)?;
        log_stage(dir, stage, "computed", started.elapsed().as_millis());
        Ok(script)
    }

    fn stage_match(
        &self,
        dir: &Path,
        script: &ConversationScript,
    ) -> Result<RoleVoiceAssignment, CliError> {
        let stage = "match";
        let pool = self.voices.as_ref().ok_or_else(|| {
            CliError::usage("voice casting requires --voices with a voice library")
        })?;
        let path = dir.join(files::ASSIGNMENT);
        let started = Instant::now();
        let expected_roles: Vec<&str> = std::iter::once(script.host_name.as_str())
            .chain(script.guests.iter().map(|g| g.name.as_str()))
            .collect();
        if path.exists() {
            let assignment: RoleVoiceAssignment = read_json(stage, &path)?;
            voice::validate_assignment(
                &assignment.assignments,
                &expected_roles,
                &script.guests,
                &pool.library,
            )
            .map_err(|violation| {
                CliError::stage(
                    stage,
                    format!("persisted {} is invalid: {violation}", path.display()),
                )
            })?;
            log_stage(dir, stage, "reused", started.elapsed().as_millis());
            return Ok(assignment);
        }
        let assignment = voice::match_voices(
            &pool.library,
            &script.host_name,
            HOST_DESCRIPTOR,
            &script.guests,
            script.outline.as_ref(),
            &*self.providers.llm,
            &self.prompts,
            &self.match_config(),
        )
        .map_err(|e| {
            log_stage(dir, stage, "failed", started.elapsed().as_millis());
            CliError::stage(stage, e)
        })?;
        write_json(stage, &path, &assignment)?;
        log_stage(dir, stage, "computed", started.elapsed().as_millis());
        Ok(assignment)
    }

    fn stage_enrich(
        &self,
        dir: &Path,
        script: &ConversationScript,
        assignment: &RoleVoiceAssignment,
    ) -> Result<AudioScript, CliError> {
        let stage = "enrich";
        let path = dir.join(files::AUDIO_SCRIPT);
        let started = Instant::now();
        if path.exists() {
            let audio_script: AudioScript = read_json(stage, &path)?;
            if audio_script.script != *script {
                return Err(CliError::stage(
                    stage,
                    format!("{} embeds a different conversation script", path.display()),
                ));
            }
            if audio_script.assignment != *assignment {
                return Err(CliError::stage(
                    stage,
                    format!("{} embeds a different voice assignment", path.display()),
                ));
            }
            let violations = audioplan::validate_audio_script(&audio_script);
            if !violations.is_empty() {
                let list: Vec<String> = violations.iter().map(|v| v.detail.clone()).collect();
                return Err(CliError::stage(
                    stage,
                    format!("persisted {} is invalid: {}", path.display(), list.join("; ")),
                ));
            }
            log_stage(dir, stage, "reused", started.elapsed().as_millis());
            return Ok(audio_script);
        }
        let audio_script = audioplan::enrich_to_audio_script(
            script,
            assignment,
            &*self.providers.llm,
            &self.prompts,
            &self.enrich_config(),
        )
        .map_err(|e| {
            log_stage(dir, stage, "failed", started.elapsed().as_millis());
            CliError::stage(stage, e)
        })?;
        write_json(stage, &path, &audio_script)?;
        log_stage(dir, stage, "computed", started.elapsed().as_millis());
        Ok(audio_script)
    }

    fn stage_mix(&self, dir: &Path, audio_script: &AudioScript) -> Result<(), CliError> {
        let stage = "mix";
        let timeline_path = dir.join(files::TIMELINE);
        let wav_path = dir.join(files::FINAL_WAV);
        let started = Instant::now();
        if timeline_path.exists() && wav_path.exists() {
            log_stage(dir, stage, "reused", started.elapsed().as_millis());
            return Ok(());
        }
        let clips = self.synthesize_clips(dir, audio_script)?;
        let timeline: Timeline = if timeline_path.exists() {
            let timeline: Timeline = read_json(stage, &timeline_path)?;
            if timeline.sample_rate_hz != self.config.sample_rate_hz {
                return Err(CliError::stage(
                    stage,
                    format!(
                        "persisted timeline is at {} Hz, config wants {} Hz",
                        timeline.sample_rate_hz, self.config.sample_rate_hz
                    ),
                ));
            }
            timeline
        } else {
            let timeline = mixer::layout(
                audio_script,
                &clips,
                self.config.sample_rate_hz,
                self.config.gap_ms,
            )
            .map_err(|e| {
                log_stage(dir, stage, "failed", started.elapsed().as_millis());
                CliError::stage(stage, e)
            })?;
            write_json(stage, &timeline_path, &timeline)?;
            timeline
        };
        if !wav_path.exists() {
            let program = mixer::render(&timeline, &clips).map_err(|e| {
                log_stage(dir, stage, "failed", started.elapsed().as_millis());
                CliError::stage(stage, e)
            })?;
            if program.limited {
                log::warn!("{}: mix exceeded full scale, soft limiter engaged", dir.display());
            }
            podforge::wav::write_wav_mono16(&wav_path, &program.samples, program.sample_rate_hz)
                .map_err(|e| CliError::stage(stage, e))?;
        }
        log_stage(dir, stage, "computed", started.elapsed().as_millis());
        Ok(())
    }

    /// One clip per audio item. Speech first (in line order) so ambient
    /// spans can be sized from the resulting line placements.
    fn synthesize_clips(
        &self,
        dir: &Path,
        audio_script: &AudioScript,
    ) -> Result<BTreeMap<usize, AudioClip>, CliError> {
        let stage = "synthesize";
        let started = Instant::now();
        let pool = self.voices.as_ref().ok_or_else(|| {
            CliError::usage("synthesis requires --voices with a voice library")
        })?;
        let rate = self.config.sample_rate_hz;
        let synthesizer = Synthesizer::new(
            &*self.providers.tts,
            &*self.providers.tta,
            rate,
            podforge::llm::RetryPolicy::default(),
        );

        let speech_items: Vec<(usize, &audioplan::AudioItem)> =
            audio_script.foreground_items().collect();
        let speech_results = par::map_results(&speech_items, |(item_index, item)| {
            let speaker = item.speaker.as_deref().ok_or_else(|| {
                CliError::stage(stage, format!("speech item {item_index} has no speaker"))
            })?;
            let voice_id = audio_script.assignment.voice_for(speaker).ok_or_else(|| {
                CliError::stage(stage, format!("no voice assigned to speaker '{speaker}'"))
            })?;
            let entry = pool.library.get(voice_id).ok_or_else(|| {
                CliError::stage(
                    stage,
                    format!("assignment names voice '{voice_id}' missing from the library"),
                )
            })?;
            let audio = resolve_audio_path(&pool.path, entry);
            let instruction = if self.config.tts_instructions {
                item.style_instruction.as_deref()
            } else {
                None
            };
            let clip = synthesizer
                .synthesize_speech(&item.content, entry, &audio, instruction, *item_index)
                .map_err(|e| CliError::stage(stage, e))?;
            Ok::<_, CliError>((*item_index, clip))
        });
        let mut clips: BTreeMap<usize, AudioClip> = BTreeMap::new();
        for result in speech_results {
            let (item_index, clip) = result.map_err(|e| {
                log_stage(dir, stage, "failed", started.elapsed().as_millis());
                e
            })?;
            clips.insert(item_index, clip);
        }

        // Line bounds under the same placement rule the mixer uses, so an
        // ambient request asks for exactly the span it must cover.
        let gap_samples = (u64::from(self.config.gap_ms) * u64::from(rate) / 1000) as usize;
        let mut bounds: Vec<(usize, usize)> = Vec::with_capacity(speech_items.len());
        let mut cursor = 0usize;
        for (item_index, _) in &speech_items {
            if !bounds.is_empty() {
                cursor += gap_samples;
            }
            let len = clips[item_index].samples.len();
            bounds.push((cursor, cursor + len));
            cursor += len;
        }

        let ambient_items: Vec<(usize, &audioplan::AudioItem)> =
            audio_script.background_items().collect();
        let ambient_results = par::map_results(&ambient_items, |(item_index, item)| {
            let (start_line, end_line) = item.span.ok_or_else(|| {
                CliError::stage(stage, format!("background item {item_index} has no span"))
            })?;
            let (span_start, span_end) = match (bounds.get(start_line), bounds.get(end_line)) {
                (Some(s), Some(e)) if start_line <= end_line => (s.0, e.1),
                _ => {
                    return Err(CliError::stage(
                        stage,
                        format!(
                            "background item {item_index} spans lines ({start_line}, {end_line}) \
                             outside the {}-line script",
                            bounds.len()
                        ),
                    ))
                }
            };
            let duration_s = (span_end - span_start) as f64 / f64::from(rate);
            let clip = synthesizer
                .synthesize_ambient(&item.content, duration_s, *item_index)
                .map_err(|e| CliError::stage(stage, e))?;
            Ok::<_, CliError>((*item_index, clip))
        });
        for result in ambient_results {
            let (item_index, clip) = result.map_err(|e| {
                log_stage(dir, stage, "failed", started.elapsed().as_millis());
                e
            })?;
            clips.insert(item_index, clip);
        }
        log_stage(dir, stage, "computed", started.elapsed().as_millis());
        Ok(clips)
    }

    fn stage_metrics(&self, dir: &Path, script: &ConversationScript) -> Result<(), CliError> {
        let stage = "metrics";
        let path = dir.join(files::METRICS);
        let started = Instant::now();
        let hash = self.config.sha256_hex();
        if path.exists() {
            let artifact: MetricsArtifact = read_json(stage, &path)?;
            if artifact.config_sha256 != hash {
                return Err(CliError::stage(
                    stage,
                    format!("persisted {} was produced under a different config", path.display()),
                ));
            }
            log_stage(dir, stage, "reused", started.elapsed().as_millis());
            return Ok(());
        }
        let report = compute_report(
            &script.metric_text(),
            &self.metric_config(),
            &*self.providers.embedder,
            &StopwordList::english_v1(),
        )
        .map_err(|e| {
            log_stage(dir, stage, "failed", started.elapsed().as_millis());
            CliError::stage(stage, e)
        })?;
        write_json(stage, &path, &MetricsArtifact { config_sha256: hash, report })?;
        log_stage(dir, stage, "computed", started.elapsed().as_millis());
        Ok(())
    }
}

fn read_json<T: DeserializeOwned>(stage: &str, path: &Path) -> Result<T, CliError> {
    let body = std::fs::read_to_string(path)
        .map_err(|e| CliError::stage(stage, format!("{}: {e}", path.display())))?;
    serde_json::from_str(&body)
        .map_err(|e| CliError::stage(stage, format!("{}: {e}", path.display())))
}

/// Writes a new artifact. Callers check existence first; a file appearing
/// in between means two processes share a run directory, which the
/// create-new open turns into an error instead of an overwrite.
fn write_json<T: Serialize>(stage: &str, path: &Path, value: &T) -> Result<(), CliError> {
    let body = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::stage(stage, format!("{}: {e}", path.display())))?;
    let mut file = std::fs::OpenOptions::new()
        .write(true)
        .create_new(true)
        .open(path)
        .map_err(|e| CliError::stage(stage, format!("{}: {e}", path.display())))?;
    file.write_all(body.as_bytes())
        .and_then(|()| file.write_all(b"\n"))
        .map_err(|e| CliError::stage(stage, format!("{}: {e}", path.display())))
}

/// Best-effort append to `run.log`; logging must never fail a run.
fn log_stage(dir: &Path, stage: &str, status: &str, elapsed_ms: u128) {
    let unix = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .unwrap_or_default();
    let line = format!(
        "{}.{:03} {stage} {status} {elapsed_ms}ms\n",
        unix.as_secs(),
        unix.subsec_millis()
    );
    let result = std::fs::OpenOptions::new()
        .append(true)
        .create(true)
        .open(dir.join(files::RUN_LOG))
        .and_then(|mut f| f.write_all(line.as_bytes()));
    if let Err(e) = result {
        log::warn!("appending to {}/run.log: {e}", dir.display());
    }
}

/// Shared batch driver: per-topic run directories fanned out over the
/// worker pool, every failure reported, usage errors taking precedence in
/// the exit code.
pub fn run_batch(runner: &Runner, topics: &[Topic], depth: RunDepth) -> Result<(), CliError> {
    let mut work: Vec<(Topic, PathBuf)> = Vec::with_capacity(topics.len());
    for topic in topics {
        let dir = runner.prepare_run_dir(topic)?;
        work.push((topic.clone(), dir));
    }
    let results = par::with_parallelism(runner.config.parallelism, || {
        par::map_results(&work, |(topic, dir)| runner.run_topic(topic, dir, depth))
    })?;

    let mut failures = 0usize;
    let mut usage: Option<String> = None;
    for ((topic, dir), result) in work.iter().zip(&results) {
        match result {
            Ok(()) => println!("{}: ok ({})", topic.id, dir.display()),
            Err(CliError::Usage(msg)) => {
                println!("{}: failed: {msg}", topic.id);
                failures += 1;
                usage.get_or_insert_with(|| msg.clone());
            }
            Err(CliError::Pipeline(msg)) => {
                println!("{}: failed: {msg}", topic.id);
                failures += 1;
            }
        }
    }
    println!("{} of {} topic runs completed", work.len() - failures, work.len());
    if let Some(msg) = usage {
        return Err(CliError::Usage(msg));
    }
    if failures > 0 {
        return Err(CliError::pipeline(format!(
            "{failures} of {} topic runs failed",
            work.len()
        )));
    }
    Ok(())
}
