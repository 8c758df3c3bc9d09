//! Run configuration with three layers: a YAML file, then `POD_*`
//! environment variables, then command-line flags, later layers winning.
//! The fully resolved config is serialized verbatim into every run
//! directory together with its SHA-256, so a resumed run can prove it is
//! continuing the same experiment.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const DEFAULT_SAMPLE_RATE_HZ: u32 = 24_000;
/// Largest cast the script engine accepts.
pub const MAX_GUESTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    MultiAgent,
    SingleAgent,
    DirectBaseline,
}

impl RunMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunMode::MultiAgent => "multi_agent",
            RunMode::SingleAgent => "single_agent",
            RunMode::DirectBaseline => "direct_baseline",
        }
    }

    /// Lenient tag parsing for env vars: case-insensitive, `-` as `_`.
    pub fn parse_tag(tag: &str) -> Option<RunMode> {
        match tag.trim().to_lowercase().replace('-', "_").as_str() {
            "multi_agent" => Some(RunMode::MultiAgent),
            "single_agent" => Some(RunMode::SingleAgent),
            "direct_baseline" => Some(RunMode::DirectBaseline),
            _ => None,
        }
    }
}

impl std::fmt::Display for RunMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Script route: the host/guest/writer workflow or one of the two
    /// single-call variants.
    pub mode: RunMode,
    pub n_guests: usize,
    /// Whether the host prepares an interview outline (multi-agent only).
    pub use_outline: bool,
    /// Metric window length in tokens.
    pub window_size: usize,
    /// Metric window stride in tokens.
    pub stride: usize,
    /// Score informational density over the whole text as one window
    /// instead of averaging over sliding windows.
    pub info_density_full_text: bool,
    /// Silence between consecutive speech clips, in milliseconds.
    pub gap_ms: u32,
    /// Pipeline sample rate; every clip is resampled to this.
    pub sample_rate_hz: u32,
    /// Pass per-line delivery instructions to the TTS backend. Off renders
    /// the same script without style steering, for A/B listening.
    pub tts_instructions: bool,
    pub model: String,
    pub temperature: f64,
    pub seed: Option<u64>,
    /// Completion endpoint; `mock:` selects the built-in offline model.
    pub llm_url: String,
    pub tts_url: String,
    pub tta_url: String,
    pub embed_url: String,
    /// Concurrent topic workers; 0 picks the thread-pool default.
    pub parallelism: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: RunMode::MultiAgent,
            n_guests: 2,
            use_outline: true,
            window_size: 100,
            stride: 1,
            info_density_full_text: false,
            gap_ms: podforge::mixer::DEFAULT_GAP_MS,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
            tts_instructions: true,
            model: "gpt-4".into(),
            temperature: 0.7,
            seed: None,
            llm_url: "mock:".into(),
            tts_url: "mock:".into(),
            tta_url: "mock:".into(),
            embed_url: "mock:".into(),
            parallelism: 0,
        }
    }
}

/// Command-line layer. Every field mirrors a [`RunConfig`] key; unset
/// flags leave the lower layers alone.
#[derive(Debug, Default, Clone, clap::Args)]
pub struct ConfigOverrides {
    /// Script route variant
    #[arg(long, value_enum)]
    pub mode: Option<RunMode>,
    /// Number of invited guests (1-5)
    #[arg(long)]
    pub n_guests: Option<usize>,
    /// Host prepares an interview outline (true/false)
    #[arg(long)]
    pub use_outline: Option<bool>,
    /// Metric window length in tokens
    #[arg(long)]
    pub window_size: Option<usize>,
    /// Metric window stride in tokens
    #[arg(long)]
    pub stride: Option<usize>,
    /// Score informational density over the whole text (true/false)
    #[arg(long)]
    pub info_density_full_text: Option<bool>,
    /// Silence between consecutive speech clips, milliseconds
    #[arg(long)]
    pub gap_ms: Option<u32>,
    /// Pipeline sample rate in Hz
    #[arg(long)]
    pub sample_rate_hz: Option<u32>,
    /// Pass per-line delivery instructions to TTS (true/false)
    #[arg(long)]
    pub tts_instructions: Option<bool>,
    /// Model name sent to the completion endpoint
    #[arg(long)]
    pub model: Option<String>,
    /// Sampling temperature for script generation
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Seed forwarded to providers that accept one
    #[arg(long)]
    pub seed: Option<u64>,
    /// Completion endpoint URL; `mock:` runs offline
    #[arg(long)]
    pub llm_url: Option<String>,
    /// Speech synthesis endpoint URL; `mock:` runs offline
    #[arg(long)]
    pub tts_url: Option<String>,
    /// Music/effect synthesis endpoint URL; `mock:` runs offline
    #[arg(long)]
    pub tta_url: Option<String>,
    /// Caption/window embedding endpoint URL; `mock:` runs offline
    #[arg(long)]
    pub embed_url: Option<String>,
    /// Concurrent topic workers; 0 uses the pool default
    #[arg(long)]
    pub parallelism: Option<usize>,
}

impl RunConfig {
    /// Full layering: file (when given), then env, then flags, then
    /// validation.
    pub fn resolve(
        file: Option<&Path>,
        overrides: &ConfigOverrides,
    ) -> Result<RunConfig, CliError> {
        let mut config = match file {
            Some(path) => RunConfig::load_file(path)?,
            None => RunConfig::default(),
        };
        config.apply_env(&|var| std::env::var(var).ok())?;
        config.apply_overrides(overrides);
        config.validate()?;
        Ok(config)
    }

    pub fn load_file(path: &Path) -> Result<RunConfig, CliError> {
        let body = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
        serde_yaml::from_str(&body)
            .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
    }

    /// Environment layer: each key reads `POD_<UPPER_SNAKE_CASE>`.
    /// `lookup` is injectable so tests need not mutate the process
    /// environment.
    pub fn apply_env(
        &mut self,
        lookup: &dyn Fn(&str) -> Option<String>,
    ) -> Result<(), CliError> {
        fn parsed<T: std::str::FromStr>(var: &str, raw: &str) -> Result<T, CliError>
        where
            T::Err: std::fmt::Display,
        {
            raw.trim()
                .parse()
                .map_err(|e| CliError::usage(format!("{var}: invalid value '{raw}': {e}")))
        }
        fn parsed_bool(var: &str, raw: &str) -> Result<bool, CliError> {
            match raw.trim().to_lowercase().as_str() {
                "1" | "true" | "yes" | "on" => Ok(true),
                "0" | "false" | "no" | "off" => Ok(false),
                _ => Err(CliError::usage(format!(
                    "{var}: invalid boolean '{raw}' (expected true/false)"
                ))),
            }
        }

        if let Some(raw) = lookup("POD_MODE") {
            self.mode = RunMode::parse_tag(&raw).ok_or_else(|| {
                CliError::usage(format!(
                    "POD_MODE: unknown mode '{raw}' (expected multi_agent, single_agent, direct_baseline)"
                ))
            })?;
        }
        if let Some(raw) = lookup("POD_N_GUESTS") {
            self.n_guests = parsed("POD_N_GUESTS", &raw)?;
        }
        if let Some(raw) = lookup("POD_USE_OUTLINE") {
            self.use_outline = parsed_bool("POD_USE_OUTLINE", &raw)?;
        }
        if let Some(raw) = lookup("POD_WINDOW_SIZE") {
            self.window_size = parsed("POD_WINDOW_SIZE", &raw)?;
        }
        if let Some(raw) = lookup("POD_STRIDE") {
            self.stride = parsed("POD_STRIDE", &raw)?;
        }
        if let Some(raw) = lookup("POD_INFO_DENSITY_FULL_TEXT") {
            self.info_density_full_text = parsed_bool("POD_INFO_DENSITY_FULL_TEXT", &raw)?;
        }
        if let Some(raw) = lookup("POD_GAP_MS") {
            self.gap_ms = parsed("POD_GAP_MS", &raw)?;
        }
        if let Some(raw) = lookup("POD_SAMPLE_RATE_HZ") {
            self.sample_rate_hz = parsed("POD_SAMPLE_RATE_HZ", &raw)?;
        }
        if let Some(raw) = lookup("POD_TTS_INSTRUCTIONS") {
            self.tts_instructions = parsed_bool("POD_TTS_INSTRUCTIONS", &raw)?;
        }
        if let Some(raw) = lookup("POD_MODEL") {
            self.model = raw;
        }
        if let Some(raw) = lookup("POD_TEMPERATURE") {
            self.temperature = parsed("POD_TEMPERATURE", &raw)?;
        }
        if let Some(raw) = lookup("POD_SEED") {
            self.seed = Some(parsed("POD_SEED", &raw)?);
        }
        if let Some(raw) = lookup(podforge::llm::ENV_LLM_URL) {
            self.llm_url = raw;
        }
        if let Some(raw) = lookup(podforge::synth::ENV_TTS_URL) {
            self.tts_url = raw;
        }
        if let Some(raw) = lookup(podforge::synth::ENV_TTA_URL) {
            self.tta_url = raw;
        }
        if let Some(raw) = lookup(podforge::embed::ENV_EMBED_URL) {
            self.embed_url = raw;
        }
        if let Some(raw) = lookup("POD_PARALLELISM") {
            self.parallelism = parsed("POD_PARALLELISM", &raw)?;
        }
        Ok(())
    }

    pub fn apply_overrides(&mut self, o: &ConfigOverrides) {
        if let Some(v) = o.mode {
            self.mode = v;
        }
        if let Some(v) = o.n_guests {
            self.n_guests = v;
        }
        if let Some(v) = o.use_outline {
            self.use_outline = v;
        }
        if let Some(v) = o.window_size {
            self.window_size = v;
        }
        if let Some(v) = o.stride {
            self.stride = v;
        }
        if let Some(v) = o.info_density_full_text {
            self.info_density_full_text = v;
        }
        if let Some(v) = o.gap_ms {
            self.gap_ms = v;
        }
        if let Some(v) = o.sample_rate_hz {
            self.sample_rate_hz = v;
        }
        if let Some(v) = o.tts_instructions {
            self.tts_instructions = v;
        }
        if let Some(v) = &o.model {
            self.model = v.clone();
        }
        if let Some(v) = o.temperature {
            self.temperature = v;
        }
        if let Some(v) = o.seed {
            self.seed = Some(v);
        }
        if let Some(v) = &o.llm_url {
            self.llm_url = v.clone();
        }
        if let Some(v) = &o.tts_url {
            self.tts_url = v.clone();
        }
        if let Some(v) = &o.tta_url {
            self.tta_url = v.clone();
        }
        if let Some(v) = &o.embed_url {
            self.embed_url = v.clone();
        }
        if let Some(v) = o.parallelism {
            self.parallelism = v;
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.n_guests == 0 || self.n_guests > MAX_GUESTS {
            return Err(CliError::usage(format!(
                "n_guests must be between 1 and {MAX_GUESTS}, got {}",
                self.n_guests
            )));
        }
        if self.window_size == 0 {
            return Err(CliError::usage("window_size must be at least 1"));
        }
        if self.stride == 0 {
            return Err(CliError::usage("stride must be at least 1"));
        }
        if self.sample_rate_hz == 0 {
            return Err(CliError::usage("sample_rate_hz must be positive"));
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(CliError::usage(format!(
                "temperature must be a finite non-negative number, got {}",
                self.temperature
            )));
        }
        if self.model.trim().is_empty() {
            return Err(CliError::usage("model must not be empty"));
        }
        Ok(())
    }

    /// YAML snapshot written into every run directory. Key order is the
    /// struct order, so identical configs produce identical bytes.
    pub fn snapshot_yaml(&self) -> String {
        serde_yaml::to_string(self).expect("config serializes")
    }

    pub fn sha256_hex(&self) -> String {
        hex::encode(Sha256::digest(self.snapshot_yaml().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_env(_: &str) -> Option<String> {
        None
    }

    #[test]
    fn defaults_are_offline_and_valid() {
        let config = RunConfig::default();
        config.validate().unwrap();
        assert_eq!(config.n_guests, 2);
        assert!(config.use_outline);
        assert_eq!(config.mode, RunMode::MultiAgent);
        assert_eq!(config.llm_url, "mock:");
        assert_eq!(config.window_size, 100);
        assert_eq!(config.stride, 1);
        assert_eq!(config.gap_ms, 300);
    }

    #[test]
    fn snapshot_round_trips_and_hash_tracks_content() {
        let config = RunConfig::default();
        let parsed: RunConfig = serde_yaml::from_str(&config.snapshot_yaml()).unwrap();
        assert_eq!(parsed, config);

        let mut changed = config.clone();
        changed.n_guests = 3;
        assert_ne!(changed.sha256_hex(), config.sha256_hex());
        assert_eq!(config.sha256_hex(), RunConfig::default().sha256_hex());
    }

    #[test]
    fn env_layer_overrides_file_values() {
        let mut config = RunConfig { n_guests: 4, ..RunConfig::default() };
        let lookup = |var: &str| match var {
            "POD_N_GUESTS" => Some("3".to_string()),
            "POD_MODE" => Some("direct-baseline".to_string()),
            "POD_USE_OUTLINE" => Some("false".to_string()),
            "POD_LLM_URL" => Some("http://llm.example/v1".to_string()),
            _ => None,
        };
        config.apply_env(&lookup).unwrap();
        assert_eq!(config.n_guests, 3);
        assert_eq!(config.mode, RunMode::DirectBaseline);
        assert!(!config.use_outline);
        assert_eq!(config.llm_url, "http://llm.example/v1");
    }

    #[test]
    fn flags_override_env() {
        let mut config = RunConfig::default();
        config.apply_env(&|var| (var == "POD_N_GUESTS").then(|| "3".to_string())).unwrap();
        let overrides = ConfigOverrides { n_guests: Some(5), ..ConfigOverrides::default() };
        config.apply_overrides(&overrides);
        assert_eq!(config.n_guests, 5);
    }

    #[test]
    fn bad_env_values_are_usage_errors() {
        let mut config = RunConfig::default();
        let err = config
            .apply_env(&|var| (var == "POD_N_GUESTS").then(|| "many".to_string()))
            .unwrap_err();
        assert!(matches!(err, CliError::Usage(_)));
        let err = config
            .apply_env(&|var| (var == "POD_USE_OUTLINE").then(|| "maybe".to_string()))
            .unwrap_err();
        assert!(matches!(err, CliError::Usage(_)));
        let err = config
            .apply_env(&|var| (var == "POD_MODE").then(|| "duet".to_string()))
            .unwrap_err();
        assert!(matches!(err, CliError::Usage(_)));
        config.apply_env(&no_env).unwrap();
    }

    #[test]
    fn validate_rejects_out_of_range_fields() {
        for breaker in [
            &mut |c: &mut RunConfig| c.n_guests = 0 as _,
            &mut |c: &mut RunConfig| c.n_guests = MAX_GUESTS + 1,
            &mut |c: &mut RunConfig| c.window_size = 0,
            &mut |c: &mut RunConfig| c.stride = 0,
            &mut |c: &mut RunConfig| c.sample_rate_hz = 0,
            &mut |c: &mut RunConfig| c.temperature = f64::NAN,
            &mut |c: &mut RunConfig| c.model = "  ".into(),
        ] as [&mut dyn FnMut(&mut RunConfig); 7]
        {
            let mut config = RunConfig::default();
            breaker(&mut config);
            assert!(matches!(config.validate(), Err(CliError::Usage(_))));
        }
    }

    #[test]
    fn unknown_yaml_keys_are_rejected() {
        let err = serde_yaml::from_str::<RunConfig>("n_guests: 2\nvolume: 11\n").unwrap_err();
        assert!(err.to_string().contains("volume"));
    }
}
