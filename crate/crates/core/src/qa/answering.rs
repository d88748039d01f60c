//! Extractive question answering over a source context.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::backend::prompt::{render_fitted, NO_ANSWER, QUESTION_ANSWERING};
use crate::backend::{BackendError, ChatBackend};
use crate::text::{find_case_insensitive, is_content, is_wh_word, tokenize, Token};

/// Longest span, in words, the offline answerer will return.
pub const MAX_SPAN_TOKENS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Answer {
    Span(String),
    NoAnswer,
}

impl Answer {
    pub fn span(&self) -> Option<&str> {
        match self {
            Answer::Span(s) => Some(s),
            Answer::NoAnswer => None,
        }
    }
}

fn is_answer_word(t: &Token) -> bool {
    is_content(&t.lower) && !is_wh_word(&t.lower)
}

/// Splits `tokens` into sentence ranges. A sentence ends at a token followed
/// by terminal punctuation and whitespace, or by a line break.
fn sentence_ranges(text: &str, tokens: &[Token]) -> Vec<(usize, usize)> {
    let mut ranges = Vec::new();
    let mut start = 0;
    for i in 1..tokens.len() {
        let gap = &text[tokens[i - 1].end..tokens[i].start];
        let ends = gap.contains('\n')
            || gap
                .char_indices()
                .any(|(k, c)| matches!(c, '.' | '!' | '?') && gap[k + 1..].starts_with(char::is_whitespace));
        if ends {
            ranges.push((start, i));
            start = i;
        }
    }
    if start < tokens.len() {
        ranges.push((start, tokens.len()));
    }
    ranges
}

type SpanRank = (usize, isize, isize, isize);

/// Offline span answerer for cloze-like questions.
///
/// The question is split at its first wh-word into a left part and a right
/// part. Each candidate span (1 to 8 words inside one context sentence,
/// starting and ending on content words) is scored by how many left-part
/// words appear before it in its sentence, how many right-part words appear
/// after it, and whether its nearest content neighbours match the words
/// adjacent to the wh-word. Ties favour spans repeating fewer question
/// words, then shorter spans, then earlier ones. Returns a byte range into
/// `context`, or `None` when the question shares no content with it.
pub fn cloze_answer(question: &str, context: &str) -> Option<(usize, usize)> {
    let q_tokens = tokenize(question);
    let slot = q_tokens.iter().position(|t| is_wh_word(&t.lower));
    let (left_q, right_q) = match slot {
        Some(s) => (&q_tokens[..s], &q_tokens[s + 1..]),
        None => (&q_tokens[..], &q_tokens[..0]),
    };
    let words = |ts: &[Token]| -> Vec<String> {
        ts.iter()
            .filter(|t| is_answer_word(t))
            .map(|t| t.lower.clone())
            .collect()
    };
    let (left_words, right_words) = (words(left_q), words(right_q));
    let left_anchor = left_words.last().cloned();
    let right_anchor = right_words.first().cloned();
    let left_set: HashSet<String> = left_words.into_iter().collect();
    let right_set: HashSet<String> = right_words.into_iter().collect();
    let question_set: HashSet<&String> = left_set.union(&right_set).collect();

    let tokens = tokenize(context);
    if !tokens.iter().any(|t| question_set.contains(&t.lower)) {
        return None;
    }

    // (score, -repeated, -len, -start) maximized lexicographically
    let mut best: Option<(SpanRank, (usize, usize))> = None;
    for (a, b) in sentence_ranges(context, &tokens) {
        let sent = &tokens[a..b];
        let n = sent.len();
        // distinct left-part words seen in sent[..i]
        let mut left_hits = vec![0usize; n + 1];
        let mut seen = HashSet::new();
        for i in 0..n {
            if is_answer_word(&sent[i]) && left_set.contains(&sent[i].lower) && seen.insert(&sent[i].lower) {
                left_hits[i + 1] = left_hits[i] + 1;
            } else {
                left_hits[i + 1] = left_hits[i];
            }
        }
        // distinct right-part words seen in sent[j..]
        let mut right_hits = vec![0usize; n + 1];
        let mut seen = HashSet::new();
        for j in (0..n).rev() {
            let hit = is_answer_word(&sent[j]) && right_set.contains(&sent[j].lower) && seen.insert(&sent[j].lower);
            right_hits[j] = right_hits[j + 1] + usize::from(hit);
        }
        let prev_word = |i: usize| sent[..i].iter().rev().find(|t| is_answer_word(t)).map(|t| &t.lower);
        let next_word = |j: usize| sent[j..].iter().find(|t| is_answer_word(t)).map(|t| &t.lower);

        for i in 0..n {
            if !is_answer_word(&sent[i]) {
                continue;
            }
            for j in i + 1..=(i + MAX_SPAN_TOKENS).min(n) {
                if !is_answer_word(&sent[j - 1]) {
                    continue;
                }
                let context_hits = left_hits[i] + right_hits[j];
                if context_hits == 0 {
                    continue;
                }
                let left_ok = prev_word(i) == left_anchor.as_ref();
                let right_ok = next_word(j) == right_anchor.as_ref();
                let score = context_hits + usize::from(left_ok) + usize::from(right_ok);
                let repeated = sent[i..j].iter().filter(|t| question_set.contains(&t.lower)).count();
                let key = (score, -(repeated as isize), -((j - i) as isize), -((a + i) as isize));
                if best.as_ref().is_none_or(|(k, _)| key > *k) {
                    best = Some((key, (sent[i].start, sent[j - 1].end)));
                }
            }
        }
    }
    best.map(|(_, range)| range)
}

/// Interprets a QA reply against its context. The sentinel or an empty
/// reply means NoAnswer; a reply that is not a substring of the context is
/// also NoAnswer rather than a fabricated span.
pub fn interpret_answer(reply: &str, context: &str) -> Answer {
    let reply = reply.trim();
    if reply.is_empty() || reply.eq_ignore_ascii_case(NO_ANSWER) {
        return Answer::NoAnswer;
    }
    if context.contains(reply) {
        return Answer::Span(reply.to_owned());
    }
    match find_case_insensitive(context, reply) {
        Some((s, e)) => Answer::Span(context[s..e].to_owned()),
        None => {
            log::debug!("answer `{reply}` not found in context");
            Answer::NoAnswer
        }
    }
}

/// Answers `question` from `context` through the QA backend.
pub fn answer_question(question: &str, context: &str, qa: &dyn ChatBackend) -> Result<Answer, BackendError> {
    if context.trim().is_empty() {
        return Err(BackendError::Config("empty QA context".into()));
    }
    let bindings: BTreeMap<&str, &str> = [("context", context), ("question", question)].into();
    let prompt = render_fitted(QUESTION_ANSWERING, &bindings, "context", qa.max_input_chars())?;
    let reply = qa.complete_prompt(&prompt)?;
    Ok(interpret_answer(&reply, context))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::MockBackend;
    use crate::qa::questions::cloze_question;
    use crate::text::squad_tokens;
    use proptest::prelude::*;

    fn answer(q: &str, c: &str) -> Option<String> {
        cloze_answer(q, c).map(|(s, e)| c[s..e].to_owned())
    }

    #[test]
    fn fills_the_slot() {
        let c = "The skin patch and the vaginal ring are two methods of birth control.";
        assert_eq!(
            answer("The skin patch and the vaginal ring are two methods of what?", c).as_deref(),
            Some("birth control")
        );
        let c = "The patch is adhesive and lasts one week.";
        assert_eq!(
            answer("The patch is what and lasts one week?", c).as_deref(),
            Some("adhesive")
        );
    }

    #[test]
    fn picks_the_matching_sentence() {
        let c = "Insulin lowers blood glucose. Statins reduce cholesterol synthesis in the liver.";
        assert_eq!(
            answer("Statins reduce what?", c).as_deref(),
            Some("cholesterol synthesis in the liver")
        );
        assert_eq!(answer("What lowers blood glucose?", c).as_deref(), Some("Insulin"));
    }

    #[test]
    fn unrelated_question_is_unanswerable() {
        assert_eq!(answer("Which zebra galloped?", "Insulin lowers blood glucose."), None);
        assert_eq!(answer("what?", "Insulin lowers blood glucose."), None);
    }

    #[test]
    fn reply_interpretation() {
        let c = "Insulin lowers blood glucose.";
        assert_eq!(interpret_answer(" NoAnswer ", c), Answer::NoAnswer);
        assert_eq!(interpret_answer("", c), Answer::NoAnswer);
        assert_eq!(
            interpret_answer("blood glucose", c),
            Answer::Span("blood glucose".into())
        );
        assert_eq!(
            interpret_answer("BLOOD glucose", c),
            Answer::Span("blood glucose".into())
        );
        assert_eq!(interpret_answer("ketones", c), Answer::NoAnswer);
    }

    #[test]
    fn backend_answers_through_template() {
        let mock = MockBackend::default();
        let c = "The patch is adhesive and lasts one week.";
        assert_eq!(
            answer_question("The patch is what and lasts one week?", c, &mock).unwrap(),
            Answer::Span("adhesive".into())
        );
        assert!(answer_question("Anything?", "  ", &mock).is_err());
    }

    proptest! {
        // Identity: a cloze question built from a sentence's own keyword is
        // answered from that sentence with the same words.
        #[test]
        fn identity_round_trip(words in proptest::collection::vec("[a-z]{4,9}", 3..12), pick in 0usize..12) {
            let sentence = format!("{}.", words.join(" "));
            let target = &words[pick % words.len()];
            prop_assume!(words.iter().filter(|w| *w == target).count() == 1);
            prop_assume!(words.iter().all(|w| is_content(w)));
            let q = cloze_question(&sentence, target).unwrap();
            let got = answer(&q, &sentence);
            if words.len() > 1 {
                prop_assert_eq!(got.map(|g| squad_tokens(&g)), Some(vec![target.clone()]));
            }
        }
    }
}
