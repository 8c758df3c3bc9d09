//! Cross-run comparison. Two run roots are paired topic by topic, scored
//! with the reference-free metrics, optionally put in front of the
//! pairwise judge, and aggregated by topic category plus an overall
//! column.

use std::collections::BTreeMap;
use std::path::Path;

use podforge::eval::{
    compute_report, diff_score, render_delta_table, CategoryDelta, MetricConfig, MetricDeltas,
    MetricReport,
};
use podforge::judge::{judge_pair, DimensionScores, JudgeConfig, JudgeDimension, JudgeVerdict};
use podforge::metrics::StopwordList;
use podforge::script::{ConversationScript, TopicCategory};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::par;
use crate::providers::Providers;
use crate::runner::files;

pub const OVERALL_COLUMN: &str = "overall";

#[derive(Debug, Serialize, Deserialize)]
pub struct PairResult {
    pub topic_id: String,
    pub category: String,
    pub ours: MetricReport,
    pub baseline: MetricReport,
    pub deltas: MetricDeltas,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub judge: Option<JudgeVerdict>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EvalReport {
    pub ours_dir: String,
    pub baseline_dir: String,
    pub metric_config: MetricConfig,
    pub judged: bool,
    pub pairs: Vec<PairResult>,
    pub categories: Vec<CategoryDelta>,
    pub table: String,
}

pub fn cmd_eval(
    config: &RunConfig,
    providers: &Providers,
    ours_dir: &Path,
    baseline_dir: &Path,
    out_path: &Path,
    judge: bool,
) -> Result<(), CliError> {
    let ours = collect_scripts(ours_dir)?;
    let baseline = collect_scripts(baseline_dir)?;

    let mut shared: Vec<String> = ours.keys().filter(|id| baseline.contains_key(*id)).cloned().collect();
    shared.sort();
    for id in ours.keys().filter(|id| !baseline.contains_key(*id)) {
        log::warn!("topic '{id}' present only under {}", ours_dir.display());
    }
    for id in baseline.keys().filter(|id| !ours.contains_key(*id)) {
        log::warn!("topic '{id}' present only under {}", baseline_dir.display());
    }
    if shared.is_empty() {
        return Err(CliError::usage(format!(
            "no topic appears under both {} and {}",
            ours_dir.display(),
            baseline_dir.display()
        )));
    }

    let metric_config = MetricConfig {
        window_size: config.window_size,
        stride: config.stride,
        info_density_full_text: config.info_density_full_text,
        ..MetricConfig::standard(providers.embedder.id())
    };
    let judge_config = JudgeConfig {
        model: config.model.clone(),
        seed: config.seed,
        ..JudgeConfig::default()
    };
    let stopwords = StopwordList::english_v1();
    let prompts = podforge::prompt::PromptStore::builtin();

    let results = par::with_parallelism(config.parallelism, || {
        par::map_results(&shared, |topic_id| {
            let ours_script = &ours[topic_id];
            let baseline_script = &baseline[topic_id];
            let ours_report = compute_report(
                &ours_script.metric_text(),
                &metric_config,
                &*providers.embedder,
                &stopwords,
            )
            .map_err(|e| CliError::stage("eval", format!("{topic_id}: ours: {e}")))?;
            let baseline_report = compute_report(
                &baseline_script.metric_text(),
                &metric_config,
                &*providers.embedder,
                &stopwords,
            )
            .map_err(|e| CliError::stage("eval", format!("{topic_id}: baseline: {e}")))?;
            let deltas = diff_score(&ours_report, &baseline_report)
                .map_err(|e| CliError::stage("eval", format!("{topic_id}: {e}")))?;
            let verdict = if judge {
                Some(
                    judge_pair(
                        &ours_script.dialogue_text(),
                        &baseline_script.dialogue_text(),
                        &*providers.llm,
                        &prompts,
                        &judge_config,
                    )
                    .map_err(|e| CliError::stage("eval", format!("{topic_id}: judge: {e}")))?,
                )
            } else {
                None
            };
            Ok::<_, CliError>(PairResult {
                topic_id: topic_id.clone(),
                category: ours_script.topic.category.as_str().to_string(),
                ours: ours_report,
                baseline: baseline_report,
                deltas,
                judge: verdict,
            })
        })
    })?;
    let mut pairs: Vec<PairResult> = Vec::with_capacity(results.len());
    for result in results {
        pairs.push(result?);
    }

    let mut categories: Vec<CategoryDelta> = Vec::new();
    for category in TopicCategory::ALL {
        let members: Vec<&PairResult> =
            pairs.iter().filter(|p| p.category == category.as_str()).collect();
        if members.is_empty() {
            continue;
        }
        categories.push(aggregate(category.as_str(), &members)?);
    }
    let all: Vec<&PairResult> = pairs.iter().collect();
    categories.push(aggregate(OVERALL_COLUMN, &all)?);

    let table = render_delta_table(&categories);
    let report = EvalReport {
        ours_dir: ours_dir.display().to_string(),
        baseline_dir: baseline_dir.display().to_string(),
        metric_config,
        judged: judge,
        pairs,
        categories,
        table,
    };

    if let Some(parent) = out_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::usage(format!("creating {}: {e}", parent.display())))?;
    }
    let json =
        serde_json::to_string_pretty(&report).map_err(|e| CliError::stage("eval", e))?;
    std::fs::write(out_path, json + "\n")
        .map_err(|e| CliError::stage("eval", format!("{}: {e}", out_path.display())))?;
    println!("{}", report.table);
    println!("wrote {}", out_path.display());
    Ok(())
}

/// Field-wise mean of the pairwise deltas (and judge finals when every
/// member was judged); degeneracy is sticky across the group.
fn aggregate(column: &str, members: &[&PairResult]) -> Result<CategoryDelta, CliError> {
    let n = members.len() as f64;
    let first = members
        .first()
        .ok_or_else(|| CliError::stage("eval", "aggregating an empty category"))?;
    let metrics = MetricDeltas {
        distinct_1: members.iter().map(|p| p.deltas.distinct_1).sum::<f64>() / n,
        distinct_2: members.iter().map(|p| p.deltas.distinct_2).sum::<f64>() / n,
        info_dens: members.iter().map(|p| p.deltas.info_dens).sum::<f64>() / n,
        semantic_div: members.iter().map(|p| p.deltas.semantic_div).sum::<f64>() / n,
        mattr: members.iter().map(|p| p.deltas.mattr).sum::<f64>() / n,
        degenerate: members.iter().any(|p| p.deltas.degenerate),
        config: first.deltas.config.clone(),
    };
    let judge = if members.iter().all(|p| p.judge.is_some()) {
        let mut mean = DimensionScores::ZERO;
        for dim in JudgeDimension::ALL {
            let sum: f64 = members
                .iter()
                .map(|p| p.judge.as_ref().map(|j| j.final_scores.get(dim)).unwrap_or(0.0))
                .sum();
            mean.set(dim, sum / n);
        }
        Some(mean)
    } else {
        None
    };
    Ok(CategoryDelta { category: column.to_string(), metrics, judge })
}

/// Loads every `<topic_id>/conversation_script.json` under a run root.
/// The directory name is authoritative for pairing; a script whose
/// embedded topic id disagrees is rejected rather than silently re-keyed.
fn collect_scripts(root: &Path) -> Result<BTreeMap<String, ConversationScript>, CliError> {
    let entries = std::fs::read_dir(root)
        .map_err(|e| CliError::usage(format!("{}: {e}", root.display())))?;
    let mut scripts = BTreeMap::new();
    for entry in entries {
        let entry = entry.map_err(|e| CliError::usage(format!("{}: {e}", root.display())))?;
        let dir = entry.path();
        if !dir.is_dir() {
            continue;
        }
        let path = dir.join(files::CONVERSATION_SCRIPT);
        if !path.exists() {
            log::warn!("{} has no conversation script, skipping", dir.display());
            continue;
        }
        let body = std::fs::read_to_string(&path)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let script: ConversationScript = serde_json::from_str(&body)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        script
            .validate()
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let dir_id = entry.file_name().to_string_lossy().to_string();
        if script.topic.id != dir_id {
            return Err(CliError::usage(format!(
                "{} belongs to topic '{}', directory says '{dir_id}'",
                path.display(),
                script.topic.id
            )));
        }
        scripts.insert(dir_id, script);
    }
    if scripts.is_empty() {
        return Err(CliError::usage(format!(
            "no run directory under {} holds a conversation script",
            root.display()
        )));
    }
    Ok(scripts)
}
