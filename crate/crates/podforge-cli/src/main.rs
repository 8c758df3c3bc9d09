//! `podforge`: scripted-podcast production pipeline.
//!
//! Subcommands: `script` (conversation script only), `generate` (full
//! audio episode), `eval` (compare two run roots), `ablate` (guest-count
//! and architecture grid), `voicepool build` (dedup a voice manifest).
//! Exit codes: 0 success, 1 pipeline stage failure, 2 usage or
//! configuration error.

mod ablate;
mod config;
mod error;
mod evalcmd;
mod par;
mod providers;
mod runner;
mod topics;
mod voicepool;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{ConfigOverrides, RunConfig};
use crate::error::CliError;
use crate::runner::{run_batch, RunDepth, Runner, VoicePool};

#[derive(Debug, Parser)]
#[command(name = "podforge", version, about = "Automated podcast production pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate conversation scripts for every topic.
    Script(RunCmd),
    /// Produce full audio episodes: script, casting, enrichment, mix.
    Generate(GenerateCmd),
    /// Compare two run roots topic by topic and write a report.
    Eval(EvalCmd),
    /// Run the guest-count and architecture ablation grid.
    Ablate(AblateCmd),
    /// Voice library maintenance.
    Voicepool(VoicepoolCmd),
}

#[derive(Debug, Args)]
struct CommonCfg {
    /// YAML config file; flags and POD_* environment variables override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

impl CommonCfg {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        RunConfig::resolve(self.config.as_deref(), &self.overrides)
    }
}

#[derive(Debug, Args)]
struct RunCmd {
    /// Topics file (TSV: [id<TAB>]category<TAB>text, or a JSON array).
    #[arg(long)]
    topics: PathBuf,
    /// Output root; one run directory per topic id.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: CommonCfg,
}

#[derive(Debug, Args)]
struct GenerateCmd {
    /// Topics file (TSV: [id<TAB>]category<TAB>text, or a JSON array).
    #[arg(long)]
    topics: PathBuf,
    /// Output root; one run directory per topic id.
    #[arg(long)]
    out: PathBuf,
    /// Deduplicated voice library JSON (from `voicepool build`).
    #[arg(long)]
    voices: PathBuf,
    #[command(flatten)]
    common: CommonCfg,
}

#[derive(Debug, Args)]
struct EvalCmd {
    /// Run root for the system under evaluation.
    #[arg(long)]
    ours: PathBuf,
    /// Run root for the baseline.
    #[arg(long)]
    baseline: PathBuf,
    /// Report path.
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
    /// Skip the pairwise judge; metric deltas only.
    #[arg(long)]
    no_judge: bool,
    #[command(flatten)]
    common: CommonCfg,
}

#[derive(Debug, Args)]
struct AblateCmd {
    /// Topics file (TSV: [id<TAB>]category<TAB>text, or a JSON array).
    #[arg(long)]
    topics: PathBuf,
    /// Directory for ablation_report.json and ablation_table.txt.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: CommonCfg,
}

#[derive(Debug, Args)]
struct VoicepoolCmd {
    #[command(subcommand)]
    action: VoicepoolAction,
}

#[derive(Debug, Subcommand)]
enum VoicepoolAction {
    /// Embed caption manifests and drop near-duplicate voices.
    Build(VoicepoolBuildCmd),
}

#[derive(Debug, Args)]
struct VoicepoolBuildCmd {
    /// Raw voice manifest (JSON array of entries).
    #[arg(long = "in")]
    input: PathBuf,
    /// Deduplicated library output path.
    #[arg(long)]
    out: PathBuf,
    /// Cosine similarity above which a voice counts as a duplicate.
    #[arg(long, default_value_t = podforge::voice::DEFAULT_DEDUP_THRESHOLD)]
    threshold: f64,
    #[command(flatten)]
    common: CommonCfg,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp_millis()
        .init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Script(cmd) => {
            let config = cmd.common.resolve()?;
            let topics = topics::load_topics(&cmd.topics)?;
            let providers = providers::build(&config)?;
            let runner = Runner::new(&config, &providers, &cmd.out, None);
            run_batch(&runner, &topics, RunDepth::ScriptOnly)
        }
        Command::Generate(cmd) => {
            let config = cmd.common.resolve()?;
            let topics = topics::load_topics(&cmd.topics)?;
            let providers = providers::build(&config)?;
            let voices = VoicePool::load(&cmd.voices)?;
            let runner = Runner::new(&config, &providers, &cmd.out, Some(voices));
            run_batch(&runner, &topics, RunDepth::Full)
        }
        Command::Eval(cmd) => {
            let config = cmd.common.resolve()?;
            let providers = providers::build(&config)?;
            evalcmd::cmd_eval(
                &config,
                &providers,
                &cmd.ours,
                &cmd.baseline,
                &cmd.out,
                !cmd.no_judge,
            )
        }
        Command::Ablate(cmd) => {
            let config = cmd.common.resolve()?;
            let topics = topics::load_topics(&cmd.topics)?;
            let providers = providers::build(&config)?;
            ablate::cmd_ablate(&config, &providers, &topics, &cmd.out)
        }
        Command::Voicepool(cmd) => match cmd.action {
            VoicepoolAction::Build(build) => {
                let config = build.common.resolve()?;
                let providers = providers::build(&config)?;
                voicepool::cmd_build(&providers, &build.input, &build.out, build.threshold)
            }
        },
    }
}
