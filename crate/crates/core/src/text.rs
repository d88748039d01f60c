//! Shared lexical helpers: whitespace normalization, word tokenization with
//! byte offsets, stopword filtering and SQuAD-style answer normalization.

use std::collections::BTreeSet;

/// English function words. Negations are deliberately absent; see
/// [`is_negation`].
const STOPWORDS: &[&str] = &[
    "a",
    "about",
    "above",
    "after",
    "again",
    "against",
    "all",
    "am",
    "an",
    "and",
    "any",
    "are",
    "as",
    "at",
    "be",
    "because",
    "been",
    "before",
    "being",
    "below",
    "between",
    "both",
    "but",
    "by",
    "can",
    "could",
    "did",
    "do",
    "does",
    "doing",
    "down",
    "during",
    "each",
    "few",
    "for",
    "from",
    "further",
    "had",
    "has",
    "have",
    "having",
    "he",
    "her",
    "here",
    "hers",
    "herself",
    "him",
    "himself",
    "his",
    "i",
    "if",
    "in",
    "into",
    "is",
    "it",
    "its",
    "itself",
    "just",
    "me",
    "might",
    "more",
    "most",
    "must",
    "my",
    "myself",
    "of",
    "off",
    "on",
    "once",
    "only",
    "or",
    "other",
    "our",
    "ours",
    "ourselves",
    "out",
    "over",
    "own",
    "same",
    "shall",
    "she",
    "should",
    "so",
    "some",
    "such",
    "than",
    "that",
    "the",
    "their",
    "theirs",
    "them",
    "themselves",
    "then",
    "there",
    "these",
    "they",
    "this",
    "those",
    "through",
    "to",
    "too",
    "under",
    "until",
    "up",
    "very",
    "was",
    "we",
    "were",
    "what",
    "when",
    "where",
    "which",
    "while",
    "who",
    "whom",
    "whose",
    "why",
    "how",
    "will",
    "with",
    "would",
    "you",
    "your",
    "yours",
    "yourself",
    "yourselves",
    "also",
    "may",
    "s",
    "t",
];

const NEGATIONS: &[&str] = &["not", "no", "nor", "never", "none", "cannot"];

const WH_WORDS: &[&str] = &["what", "which", "who", "whom", "whose", "when", "where", "why", "how"];

pub fn is_stopword(lower: &str) -> bool {
    STOPWORDS.contains(&lower)
}

pub fn is_negation(lower: &str) -> bool {
    NEGATIONS.contains(&lower) || lower.ends_with("n't")
}

pub fn is_wh_word(lower: &str) -> bool {
    WH_WORDS.contains(&lower)
}

/// A word is content-bearing when it is neither a stopword nor a negation.
pub fn is_content(lower: &str) -> bool {
    !is_stopword(lower) && !is_negation(lower)
}

/// Collapses every whitespace run to a single ASCII space and trims the ends.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// One word token. `start..end` are byte offsets into the tokenized string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub start: usize,
    pub end: usize,
    pub lower: String,
}

impl Token {
    pub fn text<'a>(&self, source: &'a str) -> &'a str {
        &source[self.start..self.end]
    }
}

fn is_joiner(c: char) -> bool {
    matches!(c, '.' | ',' | '-' | '\'' | '\u{2019}')
}

/// Splits `text` into word tokens. A token is a run of alphanumeric
/// characters; `.`, `,`, `-` and apostrophes are kept inside a token when
/// they sit between two alphanumerics ("2.5", "1,000", "SARS-CoV-2").
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].1.is_alphanumeric() {
            i += 1;
            continue;
        }
        let start = chars[i].0;
        let mut j = i + 1;
        while j < chars.len() {
            let c = chars[j].1;
            if c.is_alphanumeric() {
                j += 1;
            } else if is_joiner(c) && j + 1 < chars.len() && chars[j + 1].1.is_alphanumeric() {
                j += 2;
            } else {
                break;
            }
        }
        let end = chars.get(j).map_or(text.len(), |(b, _)| *b);
        let lower = text[start..end].to_lowercase().replace('\u{2019}', "'");
        tokens.push(Token { start, end, lower });
        i = j;
    }
    tokens
}

/// Lowercased content tokens of `text` as a set.
pub fn content_set(text: &str) -> BTreeSet<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| is_content(&t.lower))
        .map(|t| t.lower)
        .collect()
}

/// Jaccard similarity of two sets; 0 when both are empty.
pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// SQuAD answer normalization: lowercase, drop punctuation, drop the
/// articles a/an/the, split on whitespace.
pub fn squad_tokens(text: &str) -> Vec<String> {
    let cleaned: String = text
        .to_lowercase()
        .chars()
        .filter(|c| !c.is_ascii_punctuation() && !matches!(c, '\u{2018}' | '\u{2019}' | '\u{201c}' | '\u{201d}'))
        .collect();
    cleaned
        .split_whitespace()
        .filter(|w| !matches!(*w, "a" | "an" | "the"))
        .map(str::to_owned)
        .collect()
}

/// Case-insensitive substring search returning the byte range in `haystack`.
pub fn find_case_insensitive(haystack: &str, needle: &str) -> Option<(usize, usize)> {
    if needle.is_empty() {
        return None;
    }
    let needle_lower: Vec<char> = needle.chars().flat_map(char::to_lowercase).collect();
    let hay: Vec<(usize, char)> = haystack.char_indices().collect();
    'outer: for start in 0..hay.len() {
        let mut k = 0;
        let mut idx = start;
        while k < needle_lower.len() {
            let Some(&(_, c)) = hay.get(idx) else {
                continue 'outer;
            };
            for lc in c.to_lowercase() {
                if needle_lower.get(k) != Some(&lc) {
                    continue 'outer;
                }
                k += 1;
            }
            idx += 1;
        }
        let end = hay.get(idx).map_or(haystack.len(), |(b, _)| *b);
        return Some((hay[start].0, end));
    }
    None
}

pub fn contains_case_insensitive(haystack: &str, needle: &str) -> bool {
    find_case_insensitive(haystack, needle).is_some()
}

/// Truncates to at most `max_chars` Unicode scalar values.
pub fn truncate_chars(text: &str, max_chars: usize) -> &str {
    match text.char_indices().nth(max_chars) {
        Some((byte, _)) => &text[..byte],
        None => text,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_keeps_decimals_and_hyphenated_names() {
        let toks: Vec<String> = tokenize("SARS-CoV-2 fell 2.5% (1,000 cases), didn't it?")
            .into_iter()
            .map(|t| t.lower)
            .collect();
        assert_eq!(toks, ["sars-cov-2", "fell", "2.5", "1,000", "cases", "didn't", "it"]);
    }

    #[test]
    fn token_offsets_slice_source() {
        let s = "Gout  is painful.";
        let toks = tokenize(s);
        assert_eq!(toks[0].text(s), "Gout");
        assert_eq!(toks[2].text(s), "painful");
    }

    #[test]
    fn squad_normalization_drops_articles_and_punctuation() {
        assert_eq!(squad_tokens("The Heart-attack, an event."), ["heartattack", "event"]);
    }

    #[test]
    fn case_insensitive_find() {
        assert_eq!(find_case_insensitive("Limits SSB in schools", "ssb"), Some((7, 10)));
        assert_eq!(find_case_insensitive("abc", "abcd"), None);
        assert_eq!(find_case_insensitive("abc", ""), None);
    }

    #[test]
    fn negations_are_not_content() {
        assert!(!is_content("not"));
        assert!(!is_content("hasn't"));
        assert!(is_content("asthma"));
    }

    #[test]
    fn truncation_counts_chars() {
        assert_eq!(truncate_chars("héllo", 2), "hé");
        assert_eq!(truncate_chars("hi", 5), "hi");
    }
}
