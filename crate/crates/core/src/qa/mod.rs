//! Per-sentence QA chain: answer extraction, question generation, question
//! filtering, question answering against a source context, overlap scoring.

pub mod answering;
pub mod answers;
pub mod overlap;
pub mod questions;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use answering::{answer_question, cloze_answer, interpret_answer, Answer};
pub use answers::{extract_answers, parse_answer_list, AnswerMode, KeywordExtractor};
pub use overlap::{clamped_cosine, lexical_f1, score_overlap, OverlapBackendKind};
pub use questions::{cloze_question, filter_questions, generate_questions, FilterReason, QAItem, QF_MIN_F1};

use crate::backend::{BackendError, ChatBackend, EmbeddingBackend};
use crate::pipeline::{SentenceType, SentenceUnit};
use crate::retrieval::{compose_source_context, IndexError, Retriever};

#[derive(Debug, Error)]
pub enum QaError {
    #[error("answer extraction: {0}")]
    AnswerExtraction(#[source] BackendError),
    #[error("retrieval: {0}")]
    Retrieval(#[from] IndexError),
    #[error("overlap scoring: {0}")]
    Overlap(#[source] BackendError),
}

/// Everything recorded about one scored sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceTrace {
    pub index: usize,
    pub sentence: String,
    pub sentence_type: SentenceType,
    pub gold_answers: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snippet_ids: Vec<String>,
    pub items: Vec<QAItem>,
    pub score: Option<f64>,
}

/// Mean overlap over unfiltered items, a NoAnswer prediction counting 0.
/// `None` (Unscored) when no item survives.
pub fn score_sentence(items: &[QAItem]) -> Option<f64> {
    let kept: Vec<f64> = items
        .iter()
        .filter(|i| !i.is_filtered())
        .map(|i| i.overlap.unwrap_or(0.0))
        .collect();
    if kept.is_empty() {
        None
    } else {
        Some(kept.iter().sum::<f64>() / kept.len() as f64)
    }
}

/// Backends and settings for running the chain on one sentence.
pub struct QaStages<'a> {
    pub answers: AnswerMode<'a>,
    pub question_generator: &'a dyn ChatBackend,
    pub answerer: &'a dyn ChatBackend,
    pub embedder: &'a dyn EmbeddingBackend,
    pub overlap: OverlapBackendKind,
    pub filter_questions: bool,
    pub retriever: Option<&'a Retriever>,
    pub context_budget: usize,
}

impl QaStages<'_> {
    /// Runs the chain for one classified sentence. Failures confined to a
    /// single question mark that item; failures of the sentence-level stages
    /// are returned.
    pub fn run_sentence(&self, unit: &SentenceUnit, abstract_text: &str) -> Result<SentenceTrace, QaError> {
        let sentence_type = unit.sentence_type.unwrap_or(SentenceType::Simplification);
        let gold_answers = extract_answers(&unit.text, self.answers).map_err(QaError::AnswerExtraction)?;
        let generated = generate_questions(&unit.text, &gold_answers, self.question_generator);
        let mut items = filter_questions(&unit.text, generated, self.answerer, self.filter_questions);

        let mut snippet_ids = Vec::new();
        let context = if items.iter().any(|i| !i.is_filtered()) {
            let hits = match (sentence_type, self.retriever) {
                (SentenceType::Explanation, Some(r)) => r.retrieve(&unit.text)?,
                _ => Vec::new(),
            };
            snippet_ids = hits.iter().map(|(h, _)| h.chunk_id.clone()).collect();
            let chunks: Vec<_> = hits.iter().map(|(_, c)| *c).collect();
            compose_source_context(sentence_type, abstract_text, &chunks, self.context_budget)
        } else {
            String::new()
        };

        for item in items.iter_mut().filter(|i| !i.is_filtered()) {
            match answer_question(&item.question, &context, self.answerer) {
                Ok(Answer::Span(span)) => {
                    let v = score_overlap(&item.gold_answer, &span, self.overlap, self.embedder)
                        .map_err(QaError::Overlap)?;
                    item.overlap = Some(v);
                    item.predicted_answer = Some(Answer::Span(span));
                }
                Ok(Answer::NoAnswer) => item.predicted_answer = Some(Answer::NoAnswer),
                Err(e) => {
                    log::warn!("question answering failed for sentence {}: {e}", unit.index);
                    item.filter = Some(FilterReason::BackendError);
                }
            }
        }

        Ok(SentenceTrace {
            index: unit.index,
            sentence: unit.text.clone(),
            sentence_type,
            score: score_sentence(&items),
            gold_answers,
            snippet_ids,
            items,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::MockBackend;
    use crate::pipeline::ClassifierSource;
    use crate::retrieval::DEFAULT_CONTEXT_BUDGET;
    use proptest::prelude::*;

    fn unit(text: &str, ty: SentenceType) -> SentenceUnit {
        SentenceUnit {
            index: 0,
            text: text.into(),
            sentence_type: Some(ty),
            classifier_source: Some(ClassifierSource::Heuristic),
        }
    }

    fn stages<'a>(mock: &'a MockBackend, kw: &'a KeywordExtractor, overlap: OverlapBackendKind) -> QaStages<'a> {
        QaStages {
            answers: AnswerMode::Keyword(kw),
            question_generator: mock,
            answerer: mock,
            embedder: mock,
            overlap,
            filter_questions: true,
            retriever: None,
            context_budget: DEFAULT_CONTEXT_BUDGET,
        }
    }

    #[test]
    fn score_sentence_rules() {
        let mut a = QAItem::new("x", "q");
        a.overlap = Some(0.5);
        let mut b = QAItem::new("y", "q");
        b.predicted_answer = Some(Answer::NoAnswer);
        let mut c = QAItem::new("z", "q");
        c.filter = Some(FilterReason::Unanswerable);
        assert_eq!(score_sentence(&[a.clone(), b.clone(), c.clone()]), Some(0.25));
        assert_eq!(score_sentence(&[c]), None);
        assert_eq!(score_sentence(&[]), None);
    }

    #[test]
    fn identity_sentence_scores_one() {
        let mock = MockBackend::default();
        let kw = KeywordExtractor::default();
        let text = "The skin patch and the vaginal ring are two methods of birth control.";
        for overlap in [OverlapBackendKind::LexicalF1, OverlapBackendKind::SemanticEmbedding] {
            let trace = stages(&mock, &kw, overlap)
                .run_sentence(&unit(text, SentenceType::Simplification), text)
                .unwrap();
            assert!(!trace.items.is_empty());
            assert_eq!(trace.score, Some(1.0), "{trace:#?}");
        }
    }

    #[test]
    fn changed_number_lowers_score() {
        let mock = MockBackend::default();
        let kw = KeywordExtractor::default();
        let abstract_text = "In the trial 42 adults received the patch for 12 weeks.";
        let summary = "In the trial 47 adults received the patch for 12 weeks.";
        let trace = stages(&mock, &kw, OverlapBackendKind::LexicalF1)
            .run_sentence(&unit(summary, SentenceType::Simplification), abstract_text)
            .unwrap();
        let s = trace.score.unwrap();
        assert!(s < 1.0, "{trace:#?}");
    }

    #[test]
    fn no_keywords_is_unscored() {
        let mock = MockBackend::default();
        let kw = KeywordExtractor::default();
        let trace = stages(&mock, &kw, OverlapBackendKind::LexicalF1)
            .run_sentence(
                &unit("It is what it was.", SentenceType::Simplification),
                "Abstract text.",
            )
            .unwrap();
        assert_eq!(trace.score, None);
        assert!(trace.items.is_empty());
    }

    proptest! {
        #[test]
        fn overlap_set_only_on_scored_items(words in proptest::collection::vec("[a-z]{3,8}", 2..10), other in "[a-z ]{0,60}") {
            let mock = MockBackend::new(1, 32);
            let kw = KeywordExtractor::default();
            let sentence = format!("{}.", words.join(" "));
            let abstract_text = format!("{other} {sentence}");
            let trace = stages(&mock, &kw, OverlapBackendKind::LexicalF1)
                .run_sentence(&unit(&sentence, SentenceType::Simplification), &abstract_text)
                .unwrap();
            for item in &trace.items {
                let spanned = matches!(item.predicted_answer, Some(Answer::Span(_)));
                prop_assert_eq!(item.overlap.is_some(), !item.is_filtered() && spanned);
            }
            if let Some(s) = trace.score {
                prop_assert!((0.0..=1.0).contains(&s));
            }
        }
    }
}
