//! Answer extraction: candidate gold answers (keyphrases) from a summary
//! sentence.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::backend::prompt::{render_fitted, ANSWER_EXTRACTION};
use crate::backend::{BackendError, ChatBackend};
use crate::text::{contains_case_insensitive, is_content, tokenize, Token};

pub const MAX_KEYPHRASES: usize = 5;
const MAX_NGRAM: usize = 3;

/// Offline keyphrase extractor.
///
/// Candidates are n-grams (n ≤ 3) inside runs of content words that are
/// separated only by whitespace. A phrase scores the sum of its token
/// weights, where a token's weight is the smoothed inverse document
/// frequency `ln((1 + N) / (1 + df)) + 1` over a background collection
/// (uniform when none is loaded). The best-scoring non-overlapping phrases
/// are kept, then returned in sentence order.
#[derive(Debug, Clone)]
pub struct KeywordExtractor {
    doc_freq: HashMap<String, u32>,
    n_docs: u32,
    max_phrases: usize,
}

impl Default for KeywordExtractor {
    fn default() -> Self {
        KeywordExtractor {
            doc_freq: HashMap::new(),
            n_docs: 0,
            max_phrases: MAX_KEYPHRASES,
        }
    }
}

impl KeywordExtractor {
    pub fn from_documents<I, S>(docs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut doc_freq: HashMap<String, u32> = HashMap::new();
        let mut n_docs = 0;
        for doc in docs {
            n_docs += 1;
            let unique: HashSet<String> = tokenize(doc.as_ref()).into_iter().map(|t| t.lower).collect();
            for t in unique {
                *doc_freq.entry(t).or_default() += 1;
            }
        }
        KeywordExtractor {
            doc_freq,
            n_docs,
            max_phrases: MAX_KEYPHRASES,
        }
    }

    pub fn weight(&self, token: &str) -> f64 {
        let df = self.doc_freq.get(token).copied().unwrap_or(0);
        ((1.0 + f64::from(self.n_docs)) / (1.0 + f64::from(df))).ln() + 1.0
    }

    fn runs(sentence: &str, tokens: &[Token]) -> Vec<(usize, usize)> {
        let mut runs = Vec::new();
        let mut start: Option<usize> = None;
        for (i, t) in tokens.iter().enumerate() {
            let content = is_content(&t.lower);
            let joined = i > 0 && sentence[tokens[i - 1].end..t.start].chars().all(char::is_whitespace);
            match (content, start) {
                (true, Some(_)) if joined => {}
                (true, Some(s)) => {
                    runs.push((s, i));
                    start = Some(i);
                }
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    runs.push((s, i));
                    start = None;
                }
                (false, None) => {}
            }
        }
        if let Some(s) = start {
            runs.push((s, tokens.len()));
        }
        runs
    }

    pub fn extract(&self, sentence: &str) -> Vec<String> {
        let tokens = tokenize(sentence);
        let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
        for (a, b) in Self::runs(sentence, &tokens) {
            for start in a..b {
                let mut score = 0.0;
                for end in start + 1..=(start + MAX_NGRAM).min(b) {
                    score += self.weight(&tokens[end - 1].lower);
                    candidates.push((score, start, end));
                }
            }
        }
        candidates.sort_by(|x, y| {
            y.0.partial_cmp(&x.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(x.1.cmp(&y.1))
                .then((y.2 - y.1).cmp(&(x.2 - x.1)))
        });
        let mut taken = vec![false; tokens.len()];
        let mut chosen: BTreeMap<usize, String> = BTreeMap::new();
        let mut seen = HashSet::new();
        for (_, start, end) in candidates {
            if chosen.len() == self.max_phrases {
                break;
            }
            if taken[start..end].iter().any(|t| *t) {
                continue;
            }
            let phrase = &sentence[tokens[start].start..tokens[end - 1].end];
            if !seen.insert(phrase.to_lowercase()) {
                continue;
            }
            taken[start..end].iter_mut().for_each(|t| *t = true);
            chosen.insert(start, phrase.to_owned());
        }
        chosen.into_values().collect()
    }
}

#[derive(Clone, Copy)]
pub enum AnswerMode<'a> {
    Endpoint(&'a dyn ChatBackend),
    Keyword(&'a KeywordExtractor),
}

impl std::fmt::Debug for AnswerMode<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AnswerMode::Endpoint(_) => f.write_str("Endpoint"),
            AnswerMode::Keyword(_) => f.write_str("Keyword"),
        }
    }
}

/// Splits a comma-separated reply into phrases that occur in `sentence`,
/// dropping empties and case-insensitive duplicates.
pub fn parse_answer_list(reply: &str, sentence: &str) -> Vec<String> {
    let mut seen = HashSet::new();
    reply
        .split(',')
        .map(|p| p.trim().trim_matches(|c| matches!(c, '"' | '\'' | '`')).trim())
        .filter(|p| !p.is_empty())
        .filter(|p| seen.insert(p.to_lowercase()))
        .filter(|p| contains_case_insensitive(sentence, p))
        .map(str::to_owned)
        .collect()
}

/// Gold answers for one sentence. Every returned phrase is a
/// case-insensitive substring of `sentence`; an empty list leaves the
/// sentence unscorable.
pub fn extract_answers(sentence: &str, mode: AnswerMode<'_>) -> Result<Vec<String>, BackendError> {
    match mode {
        AnswerMode::Keyword(extractor) => Ok(extractor.extract(sentence)),
        AnswerMode::Endpoint(backend) => {
            let bindings: BTreeMap<&str, &str> = [("input", sentence)].into();
            let prompt = render_fitted(ANSWER_EXTRACTION, &bindings, "input", backend.max_input_chars())?;
            let reply = backend.complete_prompt(&prompt)?;
            Ok(parse_answer_list(&reply, sentence))
        }
    }
}
