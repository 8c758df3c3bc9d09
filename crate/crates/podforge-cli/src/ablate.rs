//! Guest-count and architecture ablation. A fixed variant grid is run
//! over every topic, scripts are scored with the reference-free metrics,
//! and per-variant rows average over topics. A failing cell is recorded
//! and skipped; the harness never aborts a whole grid for one topic.

use std::path::Path;

use podforge::eval::{self, average_reports, compute_report, MetricReport};
use podforge::metrics::StopwordList;
use podforge::script::{ScriptEngine, Topic};
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, RunMode};
use crate::error::CliError;
use crate::par;
use crate::providers::Providers;
use crate::runner::Runner;

pub const ABLATION_REPORT: &str = "ablation_report.json";
pub const ABLATION_TABLE: &str = "ablation_table.txt";

/// Row grid: guest counts one through five with the full multi-agent
/// loop, then the two degraded architectures at two guests.
pub const VARIANTS: [(&str, RunMode, usize, bool); 7] = [
    ("#Guest = 1", RunMode::MultiAgent, 1, true),
    ("#Guest = 2", RunMode::MultiAgent, 2, true),
    ("#Guest = 3", RunMode::MultiAgent, 3, true),
    ("#Guest = 4", RunMode::MultiAgent, 4, true),
    ("#Guest = 5", RunMode::MultiAgent, 5, true),
    ("#Guest = 2 (w/o outline)", RunMode::MultiAgent, 2, false),
    ("#Guest = 2 (Single Agent)", RunMode::SingleAgent, 2, true),
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellFailure {
    pub topic_id: String,
    pub error: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AblationRow {
    pub label: String,
    pub mode: RunMode,
    pub n_guests: usize,
    pub use_outline: bool,
    /// Mean over topics that succeeded; None when every cell failed.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub report: Option<MetricReport>,
    pub failures: Vec<CellFailure>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AblationReport {
    pub topic_count: usize,
    pub rows: Vec<AblationRow>,
    pub table: String,
}

pub fn cmd_ablate(
    config: &RunConfig,
    providers: &Providers,
    topics: &[Topic],
    out_dir: &Path,
) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::usage(format!("creating {}: {e}", out_dir.display())))?;

    // The grid fixes mode, guest count, and outline per row; the base
    // config contributes everything else (model, windowing, seed).
    let cells: Vec<(usize, usize)> = (0..VARIANTS.len())
        .flat_map(|v| (0..topics.len()).map(move |t| (v, t)))
        .collect();
    let runner = Runner::new(config, providers, out_dir, None);
    let metric_config = runner.metric_config();
    let stopwords = StopwordList::english_v1();

    let results = par::with_parallelism(config.parallelism, || {
        par::map_results(&cells, |&(v, t)| {
            let (_, mode, n_guests, use_outline) = VARIANTS[v];
            let topic = &topics[t];
            let engine =
                ScriptEngine::new(&*providers.llm, &runner.prompts, script_config_for(config));
            let script = match mode {
                RunMode::MultiAgent => engine.run_episode(topic, n_guests, use_outline),
                RunMode::SingleAgent => engine.single_agent_script(topic, n_guests),
                RunMode::DirectBaseline => engine.direct_baseline_script(topic, n_guests),
            }
            .map_err(|e| e.to_string())?;
            compute_report(
                &script.metric_text(),
                &metric_config,
                &*providers.embedder,
                &stopwords,
            )
            .map_err(|e| e.to_string())
        })
    })?;

    let mut rows: Vec<AblationRow> = Vec::with_capacity(VARIANTS.len());
    for (v, &(label, mode, n_guests, use_outline)) in VARIANTS.iter().enumerate() {
        let mut reports: Vec<MetricReport> = Vec::new();
        let mut failures: Vec<CellFailure> = Vec::new();
        for (t, topic) in topics.iter().enumerate() {
            match &results[v * topics.len() + t] {
                Ok(report) => reports.push(report.clone()),
                Err(error) => {
                    log::warn!("ablation cell '{label}' x '{}': {error}", topic.id);
                    failures.push(CellFailure { topic_id: topic.id.clone(), error: error.clone() });
                }
            }
        }
        let report = if reports.is_empty() {
            None
        } else {
            Some(average_reports(&reports).map_err(|e| CliError::stage("ablate", e))?)
        };
        rows.push(AblationRow {
            label: label.to_string(),
            mode,
            n_guests,
            use_outline,
            report,
            failures,
        });
    }

    let table_rows: Vec<(String, Option<&MetricReport>)> =
        rows.iter().map(|r| (r.label.clone(), r.report.as_ref())).collect();
    let table = eval::render_ablation_table(&table_rows);
    let report = AblationReport { topic_count: topics.len(), rows, table };

    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::stage("ablate", e))?;
    std::fs::write(out_dir.join(ABLATION_REPORT), json + "\n")
        .map_err(|e| CliError::stage("ablate", e))?;
    std::fs::write(out_dir.join(ABLATION_TABLE), &report.table)
        .map_err(|e| CliError::stage("ablate", e))?;
    println!("{}", report.table);

    let failed_cells: usize = report.rows.iter().map(|r| r.failures.len()).sum();
    if failed_cells > 0 {
        println!(
            "{failed_cells} of {} cells failed; see {}",
            VARIANTS.len() * topics.len(),
            out_dir.join(ABLATION_REPORT).display()
        );
    }
    if report.rows.iter().any(|r| r.report.is_none()) {
        return Err(CliError::pipeline("at least one ablation row has no successful cell"));
    }
    Ok(())
}

fn script_config_for(config: &RunConfig) -> podforge::script::ScriptConfig {
    podforge::script::ScriptConfig {
        model: config.model.clone(),
        temperature: config.temperature,
        seed: config.seed,
        ..podforge::script::ScriptConfig::default()
    }
}
