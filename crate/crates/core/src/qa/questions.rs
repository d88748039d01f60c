//! Question generation and question filtering.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::answering::{answer_question, Answer};
use super::overlap::lexical_f1;
use crate::backend::prompt::{render_fitted, QUESTION_GENERATION};
use crate::backend::ChatBackend;
use crate::text::{find_case_insensitive, tokenize};

/// Items whose answer-on-own-sentence scores below this lexical F1 are
/// filtered.
pub const QF_MIN_F1: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterReason {
    /// The QA stage could not answer from the sentence itself.
    Unanswerable,
    /// The self-answer disagrees with the gold answer.
    LowOverlap,
    /// A backend call failed for this item.
    BackendError,
    /// No question could be generated for the answer.
    NoQuestion,
}

/// One (answer, question) pair moving through the chain. `overlap` is set
/// only for unfiltered items whose prediction is a span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAItem {
    pub gold_answer: String,
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterReason>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_answer: Option<Answer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlap: Option<f64>,
}

impl QAItem {
    pub fn new(gold_answer: impl Into<String>, question: impl Into<String>) -> Self {
        QAItem {
            gold_answer: gold_answer.into(),
            question: question.into(),
            filter: None,
            predicted_answer: None,
            overlap: None,
        }
    }

    pub fn is_filtered(&self) -> bool {
        self.filter.is_some()
    }
}

fn is_word_boundary(text: &str, start: usize, end: usize) -> bool {
    let before = text[..start].chars().next_back();
    let after = text[end..].chars().next();
    !before.is_some_and(char::is_alphanumeric) && !after.is_some_and(char::is_alphanumeric)
}

/// Cloze-style question: the first occurrence of `answer` in `sentence`
/// (whole-word when possible) becomes "what", and the sentence ends in "?".
pub fn cloze_question(sentence: &str, answer: &str) -> Option<String> {
    let answer = answer.trim();
    let mut found = None;
    let mut from = 0;
    while let Some((s, e)) = find_case_insensitive(&sentence[from..], answer) {
        let (s, e) = (from + s, from + e);
        if is_word_boundary(sentence, s, e) {
            found = Some((s, e));
            break;
        }
        found.get_or_insert((s, e));
        from = s + sentence[s..].chars().next().map_or(1, char::len_utf8);
    }
    let (s, e) = found?;
    let mut question = format!("{}what{}", &sentence[..s], &sentence[e..]);
    let kept = question
        .trim_end()
        .trim_end_matches(['.', '!', '?', ';', ':'])
        .trim_end()
        .len();
    question.truncate(kept);
    question.push('?');
    Some(question)
}

/// Asks the QG backend for one question per answer. An empty reply or a
/// failed call yields `Err` with a message for that answer only.
pub fn generate_questions(
    sentence: &str,
    answers: &[String],
    qg: &dyn ChatBackend,
) -> Vec<(String, Result<String, String>)> {
    answers
        .iter()
        .map(|answer| {
            let bindings: BTreeMap<&str, &str> = [("answer", answer.as_str()), ("input", sentence)].into();
            let question = render_fitted(QUESTION_GENERATION, &bindings, "input", qg.max_input_chars())
                .map_err(|e| e.to_string())
                .and_then(|p| qg.complete_prompt(&p).map_err(|e| e.to_string()))
                .and_then(|q| {
                    let q = q.trim().to_owned();
                    if tokenize(&q).is_empty() {
                        Err("empty question".to_owned())
                    } else {
                        Ok(q)
                    }
                });
            (answer.clone(), question)
        })
        .collect()
}

/// Drops questions the QA stage cannot answer correctly from the sentence
/// they were generated from. With `enabled == false` every generated
/// question passes.
pub fn filter_questions(
    sentence: &str,
    generated: Vec<(String, Result<String, String>)>,
    qa: &dyn ChatBackend,
    enabled: bool,
) -> Vec<QAItem> {
    generated
        .into_iter()
        .map(|(answer, question)| {
            let question = match question {
                Ok(q) => q,
                Err(message) => {
                    log::warn!("no question for answer `{answer}`: {message}");
                    let mut item = QAItem::new(answer, "");
                    item.filter = Some(FilterReason::NoQuestion);
                    return item;
                }
            };
            let mut item = QAItem::new(answer, question);
            if enabled {
                item.filter = match answer_question(&item.question, sentence, qa) {
                    Err(e) => {
                        log::warn!("question filtering failed: {e}");
                        Some(FilterReason::BackendError)
                    }
                    Ok(Answer::NoAnswer) => Some(FilterReason::Unanswerable),
                    Ok(Answer::Span(span)) if lexical_f1(&item.gold_answer, &span) < QF_MIN_F1 => {
                        Some(FilterReason::LowOverlap)
                    }
                    Ok(Answer::Span(_)) => None,
                };
            }
            item
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{BackendError, MockBackend};

    #[test]
    fn cloze_replaces_answer() {
        assert_eq!(
            cloze_question("The patch is adhesive.", "adhesive").as_deref(),
            Some("The patch is what?")
        );
        assert_eq!(
            cloze_question("Asthma narrows airways", "ASTHMA").as_deref(),
            Some("what narrows airways?")
        );
        assert_eq!(cloze_question("The patch is adhesive.", "glue"), None);
    }

    #[test]
    fn cloze_prefers_whole_words() {
        assert_eq!(
            cloze_question("Cats and cat owners.", "cat").as_deref(),
            Some("Cats and what owners?")
        );
    }

    #[test]
    fn qf_disabled_passes_everything() {
        let generated = vec![("x".to_owned(), Ok("Unrelated question?".to_owned()))];
        let items = filter_questions("Sentence.", generated, &MockBackend::default(), false);
        assert_eq!(items.len(), 1);
        assert!(!items[0].is_filtered());
    }

    #[test]
    fn qf_filters_unanswerable_and_keeps_good() {
        let sentence = "The patch is adhesive and lasts one week.";
        let mock = MockBackend::default();
        let generated = vec![
            (
                "adhesive".to_owned(),
                Ok("The patch is what and lasts one week?".to_owned()),
            ),
            ("zebra".to_owned(), Ok("Which zebra galloped?".to_owned())),
            ("week".to_owned(), Err("empty question".to_owned())),
        ];
        let items = filter_questions(sentence, generated, &mock, true);
        assert_eq!(items[0].filter, None);
        assert_eq!(items[1].filter, Some(FilterReason::Unanswerable));
        assert_eq!(items[2].filter, Some(FilterReason::NoQuestion));
    }

    struct Reply(&'static str);

    impl ChatBackend for Reply {
        fn complete(&self, _: &str, _: &str) -> Result<String, BackendError> {
            Ok(self.0.to_owned())
        }
    }

    struct Down;

    impl ChatBackend for Down {
        fn complete(&self, _: &str, _: &str) -> Result<String, BackendError> {
            Err(BackendError::Malformed("down".into()))
        }
    }

    #[test]
    fn qf_low_overlap_and_backend_error() {
        let sentence = "The patch is adhesive and lasts one week.";
        let generated = || vec![("adhesive".to_owned(), Ok("What is the patch?".to_owned()))];
        let items = filter_questions(sentence, generated(), &Reply("one week"), true);
        assert_eq!(items[0].filter, Some(FilterReason::LowOverlap));
        let items = filter_questions(sentence, generated(), &Down, true);
        assert_eq!(items[0].filter, Some(FilterReason::BackendError));
    }

    #[test]
    fn mock_generation_round_trip() {
        let got = generate_questions(
            "The patch is adhesive.",
            &["adhesive".to_owned(), "missing".to_owned()],
            &MockBackend::default(),
        );
        assert_eq!(got[0].1.as_deref(), Ok("The patch is what?"));
        assert!(got[1].1.is_err());
    }
}
