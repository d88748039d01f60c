//! Dataset-level evaluation: statistics, bootstrap inference, multiple
//! comparison correction, perturbation and reports.

pub mod benchmark;
pub mod bootstrap;
pub mod holm;
pub mod judge;
pub mod perturb;
pub mod stats;

pub use benchmark::{
    read_score_csv, read_score_reports, read_scores, run_benchmark, write_score_csv, BenchmarkReport,
    BenchmarkSettings, Comparison, EvalError, EvalRun, MetricScores, SignificanceResult, REPORT_CSV_HEADER,
};
pub use bootstrap::{
    bootstrap_aucs, bootstrap_ci, paired_bootstrap_test, quantile_sorted, replicate_rng, resample_indices,
    ConfidenceInterval, DEFAULT_CI_LEVEL, DEFAULT_REPLICATES,
};
pub use holm::{holm_bonferroni, HolmOutcome};
pub use judge::{judge_score, parse_judge_score};
pub use perturb::{mock_perturb_sentence, perturb_summary, PerturbError, PERTURBED_SUFFIX};
pub use stats::{auc_roc, kendall_tau_b, pearson_r, StatsError};

use crate::pipeline::GoldLabel;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no sentence labels to aggregate")]
pub struct EmptyLabels;

/// A summary is non-factual as soon as one of its sentences is.
pub fn aggregate_summary_labels(sentence_labels: &[GoldLabel]) -> Result<GoldLabel, EmptyLabels> {
    if sentence_labels.is_empty() {
        return Err(EmptyLabels);
    }
    Ok(if sentence_labels.contains(&GoldLabel::NonFactual) {
        GoldLabel::NonFactual
    } else {
        GoldLabel::Factual
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use GoldLabel::{Factual as F, NonFactual as N};

    #[test]
    fn summary_labels() {
        assert_eq!(aggregate_summary_labels(&[F, F, F]), Ok(F));
        assert_eq!(aggregate_summary_labels(&[F, F, F, F, N, F, F, F, F]), Ok(N));
        assert_eq!(aggregate_summary_labels(&[N, N]), Ok(N));
        assert_eq!(aggregate_summary_labels(&[]), Err(EmptyLabels));
    }
}
