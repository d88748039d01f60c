//! Dataset-level evaluation of one or more metrics against gold labels.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::bootstrap::{bootstrap_ci, paired_bootstrap_test, ConfidenceInterval};
use super::holm::holm_bonferroni;
use super::stats::{auc_roc, kendall_tau_b, pearson_r, StatsError};
use crate::pipeline::{ScoreReport, SummaryPair};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("dataset has no summaries")]
    EmptyDataset,
    #[error("no metric scores supplied")]
    NoMetrics,
    #[error("duplicate metric name `{0}`")]
    DuplicateMetric(String),
    #[error("summaries without a gold label: {}", .0.join(", "))]
    MissingLabels(Vec<String>),
    #[error("metric `{metric}` has no score for: {}", .ids.join(", "))]
    MissingScores { metric: String, ids: Vec<String> },
    #[error("{path}:{line}: {message}")]
    ScoreFile {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("metric `{metric}`: {source}")]
    Stats {
        metric: String,
        #[source]
        source: StatsError,
    },
}

/// Scores of one metric keyed by summary id; `None` is Unscored.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricScores {
    pub name: String,
    pub scores: BTreeMap<String, Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRun {
    pub dataset_id: String,
    pub metric_name: String,
    pub ids: Vec<String>,
    pub scores: Vec<f64>,
    pub labels: Vec<u8>,
    /// `None` when undefined (a constant score column).
    pub tau: Option<f64>,
    pub pearson: Option<f64>,
    pub auc: f64,
    pub auc_ci: ConfidenceInterval,
    pub seed: u64,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub baseline_name: String,
    pub delta_auc: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
    pub rejected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceResult {
    pub primary_metric: String,
    pub comparisons: Vec<Comparison>,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSettings {
    pub replicates: usize,
    pub ci_level: f64,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for BenchmarkSettings {
    fn default() -> Self {
        BenchmarkSettings {
            replicates: super::bootstrap::DEFAULT_REPLICATES,
            ci_level: super::bootstrap::DEFAULT_CI_LEVEL,
            alpha: 0.01,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub dataset_id: String,
    pub seed: u64,
    pub settings: BenchmarkSettings,
    pub n_summaries: usize,
    pub n_evaluated: usize,
    /// Ids dropped from every metric because at least one metric left them
    /// Unscored.
    pub excluded_ids: Vec<String>,
    pub runs: Vec<EvalRun>,
    pub significance: SignificanceResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

/// Evaluates every metric; the first one is the primary metric and is
/// compared with each of the others by a paired bootstrap test, adjusted
/// with Holm-Bonferroni.
pub fn run_benchmark(
    dataset_id: &str,
    pairs: &[SummaryPair],
    metrics: &[MetricScores],
    settings: &BenchmarkSettings,
) -> Result<BenchmarkReport, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    if metrics.is_empty() {
        return Err(EvalError::NoMetrics);
    }
    let mut names = BTreeSet::new();
    for m in metrics {
        if !names.insert(m.name.as_str()) {
            return Err(EvalError::DuplicateMetric(m.name.clone()));
        }
    }
    let unlabeled: Vec<String> = pairs
        .iter()
        .filter(|p| p.gold_label.is_none())
        .map(|p| p.id.clone())
        .collect();
    if !unlabeled.is_empty() {
        return Err(EvalError::MissingLabels(unlabeled));
    }
    for m in metrics {
        let missing: Vec<String> = pairs
            .iter()
            .filter(|p| !m.scores.contains_key(&p.id))
            .map(|p| p.id.clone())
            .collect();
        if !missing.is_empty() {
            return Err(EvalError::MissingScores {
                metric: m.name.clone(),
                ids: missing,
            });
        }
        let extra = m.scores.keys().filter(|id| !pairs.iter().any(|p| &p.id == *id)).count();
        if extra > 0 {
            log::warn!("metric `{}`: {extra} scores for ids not in the dataset", m.name);
        }
    }

    let (kept, excluded): (Vec<&SummaryPair>, Vec<&SummaryPair>) = pairs
        .iter()
        .partition(|p| metrics.iter().all(|m| m.scores[&p.id].is_some()));
    let excluded_ids: Vec<String> = excluded.iter().map(|p| p.id.clone()).collect();
    if !excluded_ids.is_empty() {
        log::warn!("{} summaries Unscored by some metric are excluded", excluded_ids.len());
    }
    let ids: Vec<String> = kept.iter().map(|p| p.id.clone()).collect();
    let labels: Vec<bool> = kept
        .iter()
        .map(|p| p.gold_label.expect("checked").is_positive())
        .collect();
    let label_values: Vec<f64> = labels.iter().map(|&l| f64::from(u8::from(l))).collect();

    let columns: Vec<Vec<f64>> = metrics
        .iter()
        .map(|m| ids.iter().map(|id| m.scores[id].expect("kept")).collect())
        .collect();

    let stats_err = |metric: &str| {
        let metric = metric.to_owned();
        move |source| EvalError::Stats { metric, source }
    };
    let optional = |r: Result<f64, StatsError>, metric: &str, what: &str| match r {
        Ok(v) => Ok(Some(v)),
        Err(StatsError::UndefinedCorrelation) => {
            log::warn!("metric `{metric}`: {what} undefined");
            Ok(None)
        }
        Err(source) => Err(EvalError::Stats {
            metric: metric.to_owned(),
            source,
        }),
    };

    let mut runs = Vec::with_capacity(metrics.len());
    for (m, scores) in metrics.iter().zip(&columns) {
        let auc = auc_roc(scores, &labels).map_err(stats_err(&m.name))?;
        let auc_ci = bootstrap_ci(scores, &labels, settings.replicates, settings.ci_level, settings.seed)
            .map_err(stats_err(&m.name))?;
        runs.push(EvalRun {
            dataset_id: dataset_id.to_owned(),
            metric_name: m.name.clone(),
            ids: ids.clone(),
            scores: scores.clone(),
            labels: labels.iter().map(|&l| u8::from(l)).collect(),
            tau: optional(kendall_tau_b(scores, &label_values), &m.name, "Kendall tau")?,
            pearson: optional(pearson_r(scores, &label_values), &m.name, "Pearson r")?,
            auc,
            auc_ci,
            seed: settings.seed,
            replicates: settings.replicates,
        });
    }

    let primary = &runs[0];
    let mut raw = Vec::new();
    for (run, scores) in runs.iter().zip(&columns).skip(1) {
        let p = paired_bootstrap_test(&columns[0], scores, &labels, settings.replicates, settings.seed)
            .map_err(stats_err(&run.metric_name))?;
        raw.push((run.metric_name.clone(), primary.auc - run.auc, p));
    }
    let p_values: Vec<f64> = raw.iter().map(|r| r.2).collect();
    let comparisons = raw
        .into_iter()
        .zip(holm_bonferroni(&p_values, settings.alpha))
        .map(|((baseline_name, delta_auc, p_raw), h)| Comparison {
            baseline_name,
            delta_auc,
            p_raw,
            p_adjusted: h.p_adjusted,
            rejected: h.rejected,
        })
        .collect();

    Ok(BenchmarkReport {
        dataset_id: dataset_id.to_owned(),
        seed: settings.seed,
        settings: *settings,
        n_summaries: pairs.len(),
        n_evaluated: ids.len(),
        excluded_ids,
        significance: SignificanceResult {
            primary_metric: primary.metric_name.clone(),
            comparisons,
            alpha: settings.alpha,
        },
        runs,
        config: None,
    })
}

fn parse_score(raw: &str) -> Result<Option<f64>, String> {
    let raw = raw.trim();
    if raw.is_empty()
        || matches!(
            raw.to_ascii_lowercase().as_str(),
            "na" | "nan" | "null" | "none" | "unscored"
        )
    {
        return Ok(None);
    }
    let v: f64 = raw.parse().map_err(|_| format!("bad score `{raw}`"))?;
    if !v.is_finite() {
        return Err(format!("non-finite score `{raw}`"));
    }
    Ok(Some(v))
}

fn insert_unique(
    scores: &mut BTreeMap<String, Option<f64>>,
    path: &Path,
    line: usize,
    id: String,
    score: Option<f64>,
) -> Result<(), EvalError> {
    if id.is_empty() {
        return Err(EvalError::ScoreFile {
            path: path.to_owned(),
            line,
            message: "empty id".into(),
        });
    }
    if scores.insert(id.clone(), score).is_some() {
        return Err(EvalError::ScoreFile {
            path: path.to_owned(),
            line,
            message: format!("duplicate id `{id}`"),
        });
    }
    Ok(())
}

/// Reads an `id,score` CSV. Empty, `NA` or `null` scores are Unscored.
pub fn read_score_csv(path: impl AsRef<Path>, name: &str) -> Result<MetricScores, EvalError> {
    let path = path.as_ref();
    let file_err = |line: usize, message: String| EvalError::ScoreFile {
        path: path.to_owned(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| file_err(0, e.to_string()))?;
    let headers = reader.headers().map_err(|e| file_err(1, e.to_string()))?.clone();
    if headers.len() != 2 || &headers[0] != "id" || &headers[1] != "score" {
        return Err(file_err(1, "header must be `id,score`".into()));
    }
    let mut scores = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| file_err(line, e.to_string()))?;
        let score = parse_score(&record[1]).map_err(|m| file_err(line, m))?;
        insert_unique(&mut scores, path, line, record[0].to_owned(), score)?;
    }
    Ok(MetricScores {
        name: name.to_owned(),
        scores,
    })
}

/// Reads the JSONL score reports written by the scorer.
pub fn read_score_reports(path: impl AsRef<Path>, name: &str) -> Result<MetricScores, EvalError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut scores = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let report: ScoreReport = serde_json::from_str(line).map_err(|e| EvalError::ScoreFile {
            path: path.to_owned(),
            line: i + 1,
            message: e.to_string(),
        })?;
        insert_unique(&mut scores, path, i + 1, report.summary_id, report.final_score)?;
    }
    Ok(MetricScores {
        name: name.to_owned(),
        scores,
    })
}

/// Picks the reader by extension: `.csv` or JSONL score reports.
pub fn read_scores(path: impl AsRef<Path>) -> Result<MetricScores, EvalError> {
    let path = path.as_ref();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => read_score_csv(path, &name),
        _ => read_score_reports(path, &name),
    }
}

pub fn write_score_csv(path: impl AsRef<Path>, rows: &[(String, Option<f64>)]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["id", "score"])?;
    for (id, score) in rows {
        w.write_record([id.as_str(), &score.map(|s| s.to_string()).unwrap_or_default()])?;
    }
    w.flush()
}

pub const REPORT_CSV_HEADER: [&str; 9] = [
    "metric", "tau", "pearson", "auc", "ci_lo", "ci_hi", "p_raw", "p_adj", "rejected",
];

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl BenchmarkReport {
    pub fn write_json(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        text.push('\n');
        std::fs::write(path, text)
    }

    /// One row per metric; comparison columns are empty for the primary.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(REPORT_CSV_HEADER)?;
        for run in &self.runs {
            let cmp = self
                .significance
                .comparisons
                .iter()
                .find(|c| c.baseline_name == run.metric_name);
            w.write_record([
                run.metric_name.clone(),
                cell(run.tau),
                cell(run.pearson),
                run.auc.to_string(),
                run.auc_ci.lo.to_string(),
                run.auc_ci.hi.to_string(),
                cell(cmp.map(|c| c.p_raw)),
                cell(cmp.map(|c| c.p_adjusted)),
                cmp.map(|c| c.rejected.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        let mut inner = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        inner.flush()
    }
}
