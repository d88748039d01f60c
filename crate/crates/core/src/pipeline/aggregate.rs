use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AggregateError {
    #[error("class average {0} lies outside [0, 1]")]
    AverageOutOfRange(f64),
    #[error("a class with {count} scored sentences must carry {expect} average")]
    CountMismatch { count: usize, expect: &'static str },
}

fn check(avg: Option<f64>, count: usize) -> Result<(), AggregateError> {
    match avg {
        Some(a) if !(0.0..=1.0).contains(&a) => Err(AggregateError::AverageOutOfRange(a)),
        Some(_) if count == 0 => Err(AggregateError::CountMismatch {
            count,
            expect: "an Unscored",
        }),
        None if count > 0 => Err(AggregateError::CountMismatch { count, expect: "a" }),
        _ => Ok(()),
    }
}

/// Sentence-count weighted mean of the simplification and explanation class
/// averages. Counts are the numbers of *scored* sentences per class; a class
/// with no scored sentences is `None` and drops out of the mean. Returns
/// `None` when neither class is scored.
pub fn aggregate_score(
    s_avg: Option<f64>,
    n_s: usize,
    e_avg: Option<f64>,
    n_e: usize,
) -> Result<Option<f64>, AggregateError> {
    check(s_avg, n_s)?;
    check(e_avg, n_e)?;
    Ok(match (s_avg, e_avg) {
        (Some(s), Some(e)) => Some((s * n_s as f64 + e * n_e as f64) / (n_s + n_e) as f64),
        (Some(s), None) => Some(s),
        (None, Some(e)) => Some(e),
        (None, None) => None,
    })
}

/// Mean of the scored values, `None` when there are none.
pub fn class_average(scores: &[f64]) -> Option<f64> {
    if scores.is_empty() {
        None
    } else {
        Some(scores.iter().sum::<f64>() / scores.len() as f64)
    }
}
