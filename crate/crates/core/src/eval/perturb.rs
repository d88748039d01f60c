//! Non-factual twins built by perturbing each summary sentence.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::backend::prompt::{render_fitted, PERTURBATION};
use crate::backend::{BackendError, ChatBackend};
use crate::pipeline::{split_sentences, GoldLabel, SummaryPair};
use crate::text::{normalize_whitespace, tokenize};

const AUXILIARIES: &[&str] = &[
    "is", "are", "was", "were", "has", "have", "had", "can", "could", "will", "would", "should", "may", "might",
    "must", "does", "do", "did",
];

pub const PERTURBED_SUFFIX: &str = "-perturbed";

#[derive(Debug, Error)]
pub enum PerturbError {
    #[error("summary {id}: sentence {index} came back unchanged twice")]
    Unchanged { id: String, index: usize },
    #[error("summary {id}: {source}")]
    Backend {
        id: String,
        #[source]
        source: BackendError,
    },
    #[error("summary {id}: nothing to perturb")]
    Empty { id: String },
}

/// Offline perturbation rule.
///
/// 1. The first numeral has 5 added to its integer part (59 → 64).
/// 2. Otherwise "not" is inserted after the first auxiliary verb.
/// 3. Otherwise the sentence is prefixed with "It is not true that".
pub fn mock_perturb_sentence(sentence: &str) -> String {
    let tokens = tokenize(sentence);
    if let Some(t) = tokens
        .iter()
        .find(|t| t.lower.starts_with(|c: char| c.is_ascii_digit()))
    {
        let digits = t.lower.bytes().take_while(u8::is_ascii_digit).count();
        let value: u128 = t.lower[..digits].parse().unwrap_or(u128::MAX - 5);
        let end = t.start + digits;
        return format!("{}{}{}", &sentence[..t.start], value + 5, &sentence[end..]);
    }
    if let Some(t) = tokens.iter().find(|t| AUXILIARIES.contains(&t.lower.as_str())) {
        return format!("{} not{}", &sentence[..t.end], &sentence[t.end..]);
    }
    let trimmed = sentence.trim_start();
    let mut chars = trimmed.chars();
    match chars.next() {
        Some(first) => format!("It is not true that {}{}", first.to_lowercase(), chars.as_str()),
        None => "It is not true.".to_owned(),
    }
}

fn request(sentence: &str, perturber: &dyn ChatBackend) -> Result<String, BackendError> {
    let bindings: BTreeMap<&str, &str> = [("input", sentence), ("sentence", "")].into();
    let prompt = render_fitted(PERTURBATION, &bindings, "input", perturber.max_input_chars())?;
    Ok(perturber.complete_prompt(&prompt)?.trim().to_owned())
}

/// Builds the non-factual twin of `pair`. Every sentence is rewritten; a
/// reply equal to its input is requested once more before failing.
pub fn perturb_summary(pair: &SummaryPair, perturber: &dyn ChatBackend) -> Result<SummaryPair, PerturbError> {
    let sentences = split_sentences(&pair.summary_text);
    if sentences.is_empty() {
        return Err(PerturbError::Empty { id: pair.id.clone() });
    }
    let backend_err = |source| PerturbError::Backend {
        id: pair.id.clone(),
        source,
    };
    let mut out = Vec::with_capacity(sentences.len());
    for (index, sentence) in sentences.iter().enumerate() {
        let unchanged = |s: &str| s.is_empty() || normalize_whitespace(s) == normalize_whitespace(sentence);
        let mut reply = request(sentence, perturber).map_err(backend_err)?;
        if unchanged(&reply) {
            reply = request(sentence, perturber).map_err(backend_err)?;
            if unchanged(&reply) {
                return Err(PerturbError::Unchanged {
                    id: pair.id.clone(),
                    index,
                });
            }
        }
        out.push(normalize_whitespace(&reply));
    }
    let mut metadata = pair.metadata.clone();
    metadata.insert("provenance".into(), "perturbed".into());
    metadata.insert("source_id".into(), pair.id.clone().into());
    Ok(SummaryPair {
        id: format!("{}{PERTURBED_SUFFIX}", pair.id),
        summary_text: out.join(" "),
        abstract_text: pair.abstract_text.clone(),
        gold_label: Some(GoldLabel::NonFactual),
        sentence_types: pair.sentence_types.clone(),
        metadata,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::MockBackend;
    use std::sync::atomic::{AtomicUsize, Ordering};

    #[test]
    fn number_swap() {
        assert_eq!(
            mock_perturb_sentence("It has infected more than 59 million people."),
            "It has infected more than 64 million people."
        );
        assert_eq!(mock_perturb_sentence("Doses of 2.5 mg."), "Doses of 7.5 mg.");
    }

    #[test]
    fn negation_fallbacks() {
        assert_eq!(
            mock_perturb_sentence("The virus has infected many people."),
            "The virus has not infected many people."
        );
        assert_eq!(
            mock_perturb_sentence("Vaccines prevent measles."),
            "It is not true that vaccines prevent measles."
        );
    }

    #[test]
    fn twin_carries_provenance() {
        let pair = SummaryPair::new("p1", "Vaccines prevent measles. Two doses are given.", "Abstract.")
            .with_label(GoldLabel::Factual);
        let twin = perturb_summary(&pair, &MockBackend::default()).unwrap();
        assert_eq!(twin.id, "p1-perturbed");
        assert_eq!(twin.gold_label, Some(GoldLabel::NonFactual));
        assert_eq!(
            twin.summary_text,
            "It is not true that vaccines prevent measles. Two doses are not given."
        );
        assert_eq!(twin.metadata["provenance"], "perturbed");
        assert_eq!(twin.metadata["source_id"], "p1");
        assert_eq!(twin.abstract_text, pair.abstract_text);
    }

    struct Echo(AtomicUsize);

    impl ChatBackend for Echo {
        fn complete(&self, _: &str, user: &str) -> Result<String, BackendError> {
            self.0.fetch_add(1, Ordering::SeqCst);
            let line = user.lines().next().unwrap_or("");
            Ok(line.trim_start_matches("Sentence: ").to_owned())
        }
    }

    #[test]
    fn verbatim_reply_retried_once_then_error() {
        let echo = Echo(AtomicUsize::new(0));
        let pair = SummaryPair::new("p", "Vaccines prevent measles.", "A.");
        let err = perturb_summary(&pair, &echo).unwrap_err();
        assert!(matches!(err, PerturbError::Unchanged { index: 0, .. }));
        assert_eq!(echo.0.load(Ordering::SeqCst), 2);
    }
}
