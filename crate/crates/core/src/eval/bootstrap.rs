//! Percentile bootstrap intervals and paired bootstrap tests on AUC-ROC.
//!
//! Replicate `r` draws from a ChaCha8 generator seeded with `seed` on
//! stream `r`, so results do not depend on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{auc_unchecked, StatsError};

pub const DEFAULT_REPLICATES: usize = 10_000;
pub const DEFAULT_CI_LEVEL: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
}

/// Generator for one replicate.
pub fn replicate_rng(seed: u64, replicate: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate as u64);
    rng
}

/// Draws `labels.len()` indices with replacement, redrawing the whole
/// resample until both classes are present.
pub fn resample_indices(rng: &mut ChaCha8Rng, labels: &[bool]) -> Vec<usize> {
    let n = labels.len();
    loop {
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let pos = idx.iter().filter(|&&i| labels[i]).count();
        if pos > 0 && pos < n {
            return idx;
        }
    }
}

fn validate(scores: &[f64], labels: &[bool], replicates: usize) -> Result<(), StatsError> {
    if scores.len() != labels.len() {
        return Err(StatsError::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(StatsError::NonFinite(i));
    }
    if !labels.iter().any(|l| *l) || labels.iter().all(|l| *l) {
        return Err(StatsError::SingleClass);
    }
    if replicates == 0 {
        return Err(StatsError::ZeroReplicates);
    }
    Ok(())
}

fn auc_at(scores: &[f64], labels: &[bool], idx: &[usize]) -> f64 {
    let s: Vec<f64> = idx.iter().map(|&i| scores[i]).collect();
    let l: Vec<bool> = idx.iter().map(|&i| labels[i]).collect();
    auc_unchecked(&s, &l).expect("resample has both classes")
}

/// Linear-interpolation quantile of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Replicate AUCs in replicate order.
pub fn bootstrap_aucs(scores: &[f64], labels: &[bool], replicates: usize, seed: u64) -> Result<Vec<f64>, StatsError> {
    validate(scores, labels, replicates)?;
    Ok((0..replicates)
        .into_par_iter()
        .map(|r| {
            let idx = resample_indices(&mut replicate_rng(seed, r), labels);
            auc_at(scores, labels, &idx)
        })
        .collect())
}

/// Percentile bootstrap interval for AUC-ROC at `level`.
pub fn bootstrap_ci(
    scores: &[f64],
    labels: &[bool],
    replicates: usize,
    level: f64,
    seed: u64,
) -> Result<ConfidenceInterval, StatsError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(StatsError::InvalidLevel(level));
    }
    let mut aucs = bootstrap_aucs(scores, labels, replicates, seed)?;
    aucs.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok(ConfidenceInterval {
        lo: quantile_sorted(&aucs, tail),
        hi: quantile_sorted(&aucs, 1.0 - tail),
        level,
    })
}

/// One-sided paired bootstrap p-value `Pr(AUC_a − AUC_b ≤ 0)`; both metrics
/// are evaluated on the same resampled indices.
pub fn paired_bootstrap_test(
    scores_a: &[f64],
    scores_b: &[f64],
    labels: &[bool],
    replicates: usize,
    seed: u64,
) -> Result<f64, StatsError> {
    validate(scores_a, labels, replicates)?;
    validate(scores_b, labels, replicates)?;
    let not_better = (0..replicates)
        .into_par_iter()
        .filter(|&r| {
            let idx = resample_indices(&mut replicate_rng(seed, r), labels);
            auc_at(scores_a, labels, &idx) - auc_at(scores_b, labels, &idx) <= 0.0
        })
        .count();
    Ok(not_better as f64 / replicates as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn balanced(n: usize) -> Vec<bool> {
        (0..n).map(|i| i % 2 == 0).collect()
    }

    #[test]
    fn perfect_separation_gives_degenerate_interval() {
        let labels = balanced(20);
        let scores: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();
        let ci = bootstrap_ci(&scores, &labels, 500, 0.99, 1).unwrap();
        assert_eq!((ci.lo, ci.hi), (1.0, 1.0));
    }

    #[test]
    fn same_seed_same_interval() {
        let labels = balanced(30);
        let scores: Vec<f64> = (0..30).map(|i| ((i * 37) % 11) as f64).collect();
        let a = bootstrap_ci(&scores, &labels, 800, 0.95, 9).unwrap();
        let b = bootstrap_ci(&scores, &labels, 800, 0.95, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.lo <= a.hi);
    }

    #[test]
    fn bad_level_and_replicates() {
        let labels = balanced(4);
        let s = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(
            bootstrap_ci(&s, &labels, 10, 1.0, 0),
            Err(StatsError::InvalidLevel(1.0))
        );
        assert_eq!(
            bootstrap_ci(&s, &labels, 10, 0.0, 0),
            Err(StatsError::InvalidLevel(0.0))
        );
        assert_eq!(bootstrap_ci(&s, &labels, 0, 0.9, 0), Err(StatsError::ZeroReplicates));
        assert_eq!(bootstrap_ci(&s, &[true; 4], 10, 0.9, 0), Err(StatsError::SingleClass));
    }

    #[test]
    fn paired_test_extremes() {
        let labels = balanced(20);
        let good: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();
        let bad: Vec<f64> = good.iter().map(|s| 1.0 - s).collect();
        assert_eq!(paired_bootstrap_test(&good, &good, &labels, 300, 3).unwrap(), 1.0);
        assert_eq!(paired_bootstrap_test(&good, &bad, &labels, 300, 3).unwrap(), 0.0);
    }

    #[test]
    fn quantile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
        assert_eq!(quantile_sorted(&v, 0.5), 2.5);
        assert_eq!(quantile_sorted(&[7.0], 0.3), 7.0);
    }
}
