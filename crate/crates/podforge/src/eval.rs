//! Report assembly over the metric kernels: one struct per scored text,
//! config-checked deltas between systems, averaging across topics, and
//! plain-text tables for terminal output.
//!
//! Every report carries the exact configuration that produced it; any
//! cross-report arithmetic refuses to mix configurations.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::EmbeddingProvider;
use crate::judge::{DimensionScores, JudgeDimension};
use crate::metrics::{self, MetricsError, StopwordList};

pub const DEFAULT_WINDOW_SIZE: usize = 100;
pub const DEFAULT_STRIDE: usize = 1;

/// Metric column labels, in report order.
pub const METRIC_LABELS: [&str; 5] =
    ["Distinct-1", "Distinct-2", "Info-Dens", "Sem-Div", "MATTR"];

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("config mismatch on {field}: {left} vs {right}")]
    ConfigMismatch { field: &'static str, left: String, right: String },
    #[error("no reports to aggregate")]
    NoReports,
}

/// Everything that determines a metric value besides the text itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub window_size: usize,
    pub stride: usize,
    pub tokenizer_id: String,
    pub stopword_list_id: String,
    pub embedder_id: String,
    /// When set, informational density is computed over the whole text as
    /// one window instead of averaged over sliding windows.
    pub info_density_full_text: bool,
}

impl MetricConfig {
    /// Default windowing bound to a specific embedder and the embedded
    /// English stopword list.
    pub fn standard(embedder_id: impl Into<String>) -> Self {
        MetricConfig {
            window_size: DEFAULT_WINDOW_SIZE,
            stride: DEFAULT_STRIDE,
            tokenizer_id: metrics::TOKENIZER_ID.to_string(),
            stopword_list_id: StopwordList::english_v1().id().to_string(),
            embedder_id: embedder_id.into(),
            info_density_full_text: false,
        }
    }

    fn check_same(&self, other: &Self) -> Result<(), EvalError> {
        fn diff<T: PartialEq + std::fmt::Display>(
            field: &'static str,
            l: &T,
            r: &T,
        ) -> Result<(), EvalError> {
            if l == r {
                Ok(())
            } else {
                Err(EvalError::ConfigMismatch { field, left: l.to_string(), right: r.to_string() })
            }
        }
        diff("window_size", &self.window_size, &other.window_size)?;
        diff("stride", &self.stride, &other.stride)?;
        diff("tokenizer_id", &self.tokenizer_id, &other.tokenizer_id)?;
        diff("stopword_list_id", &self.stopword_list_id, &other.stopword_list_id)?;
        diff("embedder_id", &self.embedder_id, &other.embedder_id)?;
        diff(
            "info_density_full_text",
            &self.info_density_full_text,
            &other.info_density_full_text,
        )?;
        Ok(())
    }
}

/// All five diversity scores for one text, plus the config that made them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub distinct_1: f64,
    pub distinct_2: f64,
    pub info_dens: f64,
    pub semantic_div: f64,
    pub mattr: f64,
    /// True when the text was too short for pairwise divergence and
    /// `semantic_div` degraded to 0.
    pub semantic_div_degenerate: bool,
    pub config: MetricConfig,
}

impl MetricReport {
    /// Values in `METRIC_LABELS` order.
    pub fn values(&self) -> [f64; 5] {
        [self.distinct_1, self.distinct_2, self.info_dens, self.semantic_div, self.mattr]
    }
}

/// Scores `text` under `config`. The config's tokenizer, stopword list,
/// and embedder ids must name exactly what was passed in; a report must
/// never claim a configuration other than the one that produced it.
pub fn compute_report(
    text: &str,
    config: &MetricConfig,
    embedder: &dyn EmbeddingProvider,
    stopwords: &StopwordList,
) -> Result<MetricReport, EvalError> {
    let pin =
        |field: &'static str, want: &str, got: &str| -> Result<(), EvalError> {
            if want == got {
                Ok(())
            } else {
                Err(EvalError::ConfigMismatch {
                    field,
                    left: want.to_string(),
                    right: got.to_string(),
                })
            }
        };
    pin("tokenizer_id", &config.tokenizer_id, metrics::TOKENIZER_ID)?;
    pin("stopword_list_id", &config.stopword_list_id, stopwords.id())?;
    pin("embedder_id", &config.embedder_id, &embedder.id())?;

    let tokens = metrics::tokenize(text);
    let windows = metrics::make_windows(tokens.len(), config.window_size, config.stride)?;
    let distinct_1 = metrics::distinct_n(&tokens, 1, &windows)?;
    let distinct_2 = metrics::distinct_n(&tokens, 2, &windows)?;
    let mattr = metrics::mattr(&tokens, &windows)?;
    let info_dens = if config.info_density_full_text {
        metrics::info_density_full_text(&tokens, stopwords)?
    } else {
        metrics::info_density(&tokens, &windows, stopwords)?
    };
    let sem = metrics::semantic_div(text, embedder, config.window_size)?;
    Ok(MetricReport {
        distinct_1,
        distinct_2,
        info_dens,
        semantic_div: sem.value,
        mattr,
        semantic_div_degenerate: sem.degenerate,
        config: config.clone(),
    })
}

/// Per-metric differences `system - baseline` between two same-config
/// reports. Positive means the system scored higher.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDeltas {
    pub distinct_1: f64,
    pub distinct_2: f64,
    pub info_dens: f64,
    pub semantic_div: f64,
    pub mattr: f64,
    /// True when either side's semantic divergence was degenerate.
    pub degenerate: bool,
    pub config: MetricConfig,
}

impl MetricDeltas {
    /// Values in `METRIC_LABELS` order.
    pub fn values(&self) -> [f64; 5] {
        [self.distinct_1, self.distinct_2, self.info_dens, self.semantic_div, self.mattr]
    }
}

pub fn diff_score(
    system: &MetricReport,
    baseline: &MetricReport,
) -> Result<MetricDeltas, EvalError> {
    system.config.check_same(&baseline.config)?;
    Ok(MetricDeltas {
        distinct_1: system.distinct_1 - baseline.distinct_1,
        distinct_2: system.distinct_2 - baseline.distinct_2,
        info_dens: system.info_dens - baseline.info_dens,
        semantic_div: system.semantic_div - baseline.semantic_div,
        mattr: system.mattr - baseline.mattr,
        degenerate: system.semantic_div_degenerate || baseline.semantic_div_degenerate,
        config: system.config.clone(),
    })
}

/// Arithmetic mean of each metric over same-config reports. Degenerate
/// semantic divergences contribute their 0 values to the mean and set the
/// flag on the result.
pub fn average_reports(reports: &[MetricReport]) -> Result<MetricReport, EvalError> {
    let first = reports.first().ok_or(EvalError::NoReports)?;
    for r in &reports[1..] {
        first.config.check_same(&r.config)?;
    }
    let n = reports.len() as f64;
    Ok(MetricReport {
        distinct_1: reports.iter().map(|r| r.distinct_1).sum::<f64>() / n,
        distinct_2: reports.iter().map(|r| r.distinct_2).sum::<f64>() / n,
        info_dens: reports.iter().map(|r| r.info_dens).sum::<f64>() / n,
        semantic_div: reports.iter().map(|r| r.semantic_div).sum::<f64>() / n,
        mattr: reports.iter().map(|r| r.mattr).sum::<f64>() / n,
        semantic_div_degenerate: reports.iter().any(|r| r.semantic_div_degenerate),
        config: first.config.clone(),
    })
}

/// One column of the delta table: a topic category with its averaged
/// metric deltas and, when judging ran, averaged judge scores.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CategoryDelta {
    pub category: String,
    pub metrics: MetricDeltas,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub judge: Option<DimensionScores>,
}

/// Pipe table with categories as columns; metric delta rows first, judge
/// dimension rows after when any column has judge scores. Signed cells.
pub fn render_delta_table(deltas: &[CategoryDelta]) -> String {
    let headers: Vec<String> = deltas.iter().map(|d| d.category.clone()).collect();
    let mut rows: Vec<(String, Vec<Option<f64>>)> = Vec::new();
    for (i, label) in METRIC_LABELS.iter().enumerate() {
        let cells = deltas.iter().map(|d| Some(d.metrics.values()[i])).collect();
        rows.push(((*label).to_string(), cells));
    }
    if deltas.iter().any(|d| d.judge.is_some()) {
        for dim in JudgeDimension::ALL {
            let cells = deltas.iter().map(|d| d.judge.as_ref().map(|j| j.get(dim))).collect();
            rows.push((dim.label().to_string(), cells));
        }
    }
    render_grid("Metric", &headers, &rows, true)
}

/// Pipe table with one row per pipeline variant and the five metric
/// columns. A `None` report renders as a row of dashes.
pub fn render_ablation_table(rows: &[(String, Option<&MetricReport>)]) -> String {
    let headers: Vec<String> = METRIC_LABELS.iter().map(|l| (*l).to_string()).collect();
    let grid_rows: Vec<(String, Vec<Option<f64>>)> = rows
        .iter()
        .map(|(label, report)| {
            let cells = match report {
                Some(r) => r.values().iter().copied().map(Some).collect(),
                None => vec![None; METRIC_LABELS.len()],
            };
            (label.clone(), cells)
        })
        .collect();
    render_grid("Variant", &headers, &grid_rows, false)
}

/// Aligned pipe table. `signed` switches cells to explicit +/- form.
pub fn render_grid(
    label_header: &str,
    col_headers: &[String],
    rows: &[(String, Vec<Option<f64>>)],
    signed: bool,
) -> String {
    let fmt = |v: &Option<f64>| -> String {
        match v {
            Some(x) if signed => format!("{x:+.4}"),
            Some(x) => format!("{x:.4}"),
            None => "-".to_string(),
        }
    };
    let mut widths: Vec<usize> = Vec::with_capacity(col_headers.len() + 1);
    widths.push(
        rows.iter().map(|(l, _)| l.len()).chain([label_header.len()]).max().unwrap_or(0),
    );
    for (c, header) in col_headers.iter().enumerate() {
        let cells = rows.iter().map(|(_, vs)| fmt(vs.get(c).unwrap_or(&None)).len());
        widths.push(cells.chain([header.len()]).max().unwrap_or(0));
    }
    let mut out = String::new();
    let emit_row = |out: &mut String, cells: &[String]| {
        out.push('|');
        for (w, cell) in widths.iter().zip(cells) {
            out.push_str(&format!(" {cell:<w$} |"));
        }
        out.push('\n');
    };
    let mut header_cells = vec![label_header.to_string()];
    header_cells.extend(col_headers.iter().cloned());
    emit_row(&mut out, &header_cells);
    out.push('|');
    for w in &widths {
        out.push_str(&format!("{}-|", "-".repeat(w + 1)));
    }
    out.push('\n');
    for (label, values) in rows {
        let mut cells = vec![label.clone()];
        cells.extend(values.iter().map(fmt));
        emit_row(&mut out, &cells);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::HashEmbedder;

    fn embedder() -> HashEmbedder {
        HashEmbedder::new(32)
    }

    fn config() -> MetricConfig {
        let mut c = MetricConfig::standard(embedder().id());
        c.window_size = 5;
        c
    }

    const TEXT: &str = "galaxies rotate faster than visible matter allows \
                        so either gravity bends differently or unseen mass \
                        fills every halo around every galaxy we measure";

    #[test]
    fn report_echoes_config_and_ties_mattr_to_distinct_1() {
        let cfg = config();
        let report =
            compute_report(TEXT, &cfg, &embedder(), &StopwordList::english_v1()).unwrap();
        assert_eq!(report.config, cfg);
        assert_eq!(report.distinct_1.to_bits(), report.mattr.to_bits());
        assert!(report.distinct_2 > 0.0 && report.distinct_2 <= 1.0);
        assert!(!report.semantic_div_degenerate);
    }

    #[test]
    fn wrong_tokenizer_id_is_rejected() {
        let mut cfg = config();
        cfg.tokenizer_id = "other_v9".into();
        let err = compute_report(TEXT, &cfg, &embedder(), &StopwordList::english_v1())
            .unwrap_err();
        assert!(matches!(err, EvalError::ConfigMismatch { field: "tokenizer_id", .. }));
    }

    #[test]
    fn wrong_embedder_id_is_rejected() {
        let mut cfg = config();
        cfg.embedder_id = "fnv_hash_999_v1".into();
        let err = compute_report(TEXT, &cfg, &embedder(), &StopwordList::english_v1())
            .unwrap_err();
        assert!(matches!(err, EvalError::ConfigMismatch { field: "embedder_id", .. }));
    }

    #[test]
    fn full_text_density_equals_windowed_when_one_window() {
        let mut windowed = config();
        windowed.window_size = 500;
        let mut full = windowed.clone();
        full.info_density_full_text = true;
        let sw = StopwordList::english_v1();
        let a = compute_report(TEXT, &windowed, &embedder(), &sw).unwrap();
        let b = compute_report(TEXT, &full, &embedder(), &sw).unwrap();
        assert_eq!(a.info_dens.to_bits(), b.info_dens.to_bits());
    }

    #[test]
    fn diff_score_subtracts_and_pins_config() {
        let cfg = config();
        let sw = StopwordList::english_v1();
        let a = compute_report(TEXT, &cfg, &embedder(), &sw).unwrap();
        let b = compute_report("one two three four five six seven eight", &cfg, &embedder(), &sw)
            .unwrap();
        let d = diff_score(&a, &b).unwrap();
        assert!((d.distinct_1 - (a.distinct_1 - b.distinct_1)).abs() < 1e-15);
        assert!((d.info_dens - (a.info_dens - b.info_dens)).abs() < 1e-15);

        let mut other = b.clone();
        other.config.stride = 7;
        assert!(matches!(
            diff_score(&a, &other),
            Err(EvalError::ConfigMismatch { field: "stride", .. })
        ));
    }

    #[test]
    fn averaging_means_fields_and_ors_degeneracy() {
        let cfg = config();
        let mk = |v: f64, degenerate: bool| MetricReport {
            distinct_1: v,
            distinct_2: v * 2.0,
            info_dens: v * 3.0,
            semantic_div: if degenerate { 0.0 } else { v },
            mattr: v,
            semantic_div_degenerate: degenerate,
            config: cfg.clone(),
        };
        let avg = average_reports(&[mk(0.2, false), mk(0.4, true)]).unwrap();
        assert!((avg.distinct_1 - 0.3).abs() < 1e-15);
        assert!((avg.distinct_2 - 0.6).abs() < 1e-15);
        assert!((avg.semantic_div - 0.1).abs() < 1e-15);
        assert!(avg.semantic_div_degenerate);
        assert!(matches!(average_reports(&[]), Err(EvalError::NoReports)));
    }

    #[test]
    fn tables_render_headers_and_dashes() {
        let cfg = config();
        let sw = StopwordList::english_v1();
        let report = compute_report(TEXT, &cfg, &embedder(), &sw).unwrap();
        let table = render_ablation_table(&[
            ("variant-a".into(), Some(&report)),
            ("variant-b".into(), None),
        ]);
        assert!(table.contains("Distinct-1"));
        assert!(table.contains("variant-b"));
        let dash_row = table.lines().last().unwrap();
        assert_eq!(dash_row.matches(" - ").count(), 5, "{table}");

        let deltas = diff_score(&report, &report).unwrap();
        let delta_table = render_delta_table(&[CategoryDelta {
            category: "science".into(),
            metrics: deltas,
            judge: None,
        }]);
        assert!(delta_table.contains("science"));
        assert!(delta_table.contains("+0.0000"));
    }
}
