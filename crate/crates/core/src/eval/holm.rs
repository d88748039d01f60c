use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolmOutcome {
    pub p_adjusted: f64,
    pub rejected: bool,
}

/// Holm-Bonferroni step-down adjustment. Results are in input order.
/// Hypotheses are rejected in ascending raw-p order while the adjusted p
/// stays below `alpha`; the first failure stops all further rejections.
pub fn holm_bonferroni(p_values: &[f64], alpha: f64) -> Vec<HolmOutcome> {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let mut out = vec![
        HolmOutcome {
            p_adjusted: 1.0,
            rejected: false,
        };
        m
    ];
    let mut running = 0.0f64;
    let mut still_rejecting = true;
    for (rank, &i) in order.iter().enumerate() {
        let adjusted = ((m - rank) as f64 * p_values[i]).min(1.0);
        running = running.max(adjusted);
        still_rejecting &= running < alpha;
        out[i] = HolmOutcome {
            p_adjusted: running,
            rejected: still_rejecting,
        };
    }
    out
}
