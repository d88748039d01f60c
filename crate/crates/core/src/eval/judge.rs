//! Direct-rating baseline: the chat backend rates factuality on 0-100.

use std::collections::BTreeMap;

use crate::backend::prompt::{render_fitted, JUDGE};
use crate::backend::{BackendError, ChatBackend};

/// Reads the first number in a judge reply and maps 0-100 onto [0, 1].
pub fn parse_judge_score(reply: &str) -> Result<f64, BackendError> {
    let start = reply
        .find(|c: char| c.is_ascii_digit())
        .ok_or_else(|| BackendError::Malformed(format!("no score in `{reply}`")))?;
    let num: String = reply[start..]
        .chars()
        .take_while(|c| c.is_ascii_digit() || *c == '.')
        .collect();
    let value: f64 = num
        .trim_end_matches('.')
        .parse()
        .map_err(|_| BackendError::Malformed(format!("bad score `{num}`")))?;
    if !(0.0..=100.0).contains(&value) {
        return Err(BackendError::Malformed(format!("score {value} outside 0-100")));
    }
    Ok(value / 100.0)
}

pub fn judge_score(text: &str, abstract_text: &str, judge: &dyn ChatBackend) -> Result<f64, BackendError> {
    let bindings: BTreeMap<&str, &str> = [("input", text), ("abstract", abstract_text), ("score", "")].into();
    let prompt = render_fitted(JUDGE, &bindings, "abstract", judge.max_input_chars())?;
    parse_judge_score(&judge.complete_prompt(&prompt)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::MockBackend;

    #[test]
    fn parses_scores() {
        assert_eq!(parse_judge_score("85").unwrap(), 0.85);
        assert_eq!(parse_judge_score("Score: 100.").unwrap(), 1.0);
        assert!(parse_judge_score("none").is_err());
        assert!(parse_judge_score("250").is_err());
    }

    #[test]
    fn mock_judge_rates_copies_fully() {
        let a = "Gout causes joint pain.";
        assert_eq!(judge_score(a, a, &MockBackend::default()).unwrap(), 1.0);
        assert_eq!(
            judge_score("Inhalers open airways.", a, &MockBackend::default()).unwrap(),
            0.0
        );
    }
}
