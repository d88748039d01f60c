//! Rule-based sentence boundary detection.
//!
//! A boundary is placed after `.`, `!` or `?` (plus any closing quotes or
//! brackets) when the next character after the following space starts a new
//! sentence: an uppercase letter, a digit, or an opening quote/bracket.
//! Periods belonging to an entry of [`ABBREVIATIONS`] or to a single
//! uppercase initial never end a sentence.

use crate::text::normalize_whitespace;

/// Lowercased abbreviations, including their trailing period.
pub const ABBREVIATIONS: &[&str] = &[
    "e.g.", "i.e.", "dr.", "vs.", "al.", "mr.", "mrs.", "ms.", "prof.", "fig.", "figs.", "no.", "nos.", "approx.",
    "vol.", "st.", "jr.", "sr.", "cf.", "ca.", "u.s.", "u.k.", "inc.", "ltd.", "co.", "dept.", "eq.", "ref.", "ed.",
    "eds.", "p.", "pp.", "min.", "max.", "wt.", "resp.",
];

const CLOSERS: &[char] = &['"', '\'', ')', ']', '}', '\u{201d}', '\u{2019}'];
const OPENERS: &[char] = &['"', '\'', '(', '[', '{', '\u{201c}', '\u{2018}'];

fn is_abbreviation(word: &str) -> bool {
    let trimmed = word.trim_start_matches(OPENERS);
    let lower = trimmed.to_lowercase();
    if ABBREVIATIONS.contains(&lower.as_str()) {
        return true;
    }
    // single-letter initials such as "J."
    let mut chars = trimmed.chars();
    matches!((chars.next(), chars.next(), chars.next()), (Some(c), Some('.'), None) if c.is_uppercase())
}

fn starts_sentence(c: char) -> bool {
    c.is_uppercase() || c.is_ascii_digit() || OPENERS.contains(&c)
}

/// Splits `text` into sentences. Whitespace is normalized first, so joining
/// the result with single spaces reproduces `normalize_whitespace(text)`.
pub fn split_sentences(text: &str) -> Vec<String> {
    let normalized = normalize_whitespace(text);
    if normalized.is_empty() {
        return Vec::new();
    }
    let mut sentences = Vec::new();
    let mut start = 0;
    // every boundary candidate is a single space in the normalized text
    for (space, _) in normalized.match_indices(' ') {
        let before = &normalized[start..space];
        let Some(next) = normalized[space + 1..].chars().next() else {
            continue;
        };
        let core = before.trim_end_matches(CLOSERS);
        let Some(last) = core.chars().last() else {
            continue;
        };
        if !matches!(last, '.' | '!' | '?') || !starts_sentence(next) {
            continue;
        }
        if last == '.' {
            let word = core.rsplit(' ').next().unwrap_or(core);
            if is_abbreviation(word) {
                continue;
            }
        }
        sentences.push(before.to_owned());
        start = space + 1;
    }
    sentences.push(normalized[start..].to_owned());
    sentences
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_input_yields_nothing() {
        assert!(split_sentences("").is_empty());
        assert!(split_sentences(" \n\t ").is_empty());
    }

    #[test]
    fn two_plain_sentences() {
        assert_eq!(
            split_sentences("Gout is painful. It affects joints."),
            ["Gout is painful.", "It affects joints."]
        );
    }

    #[test]
    fn abbreviations_and_decimals_do_not_split() {
        // Candidate spaces after a terminal mark: "e.g." (abbrev), "weeks."
        // (boundary), "Dr." (abbrev). "2.5" has no following space.
        assert_eq!(
            split_sentences("Patients (e.g. adults) improved after 2.5 weeks. Dr. Smith agreed."),
            ["Patients (e.g. adults) improved after 2.5 weeks.", "Dr. Smith agreed."]
        );
    }

    #[test]
    fn et_al_and_initials() {
        assert_eq!(
            split_sentences("Smith et al. Reported it. J. Doe agreed!"),
            ["Smith et al. Reported it.", "J. Doe agreed!"]
        );
    }

    #[test]
    fn closing_quote_and_bracket_stay_with_sentence() {
        assert_eq!(
            split_sentences("He said \"stop.\" Then left (quietly.) Done?"),
            ["He said \"stop.\"", "Then left (quietly.)", "Done?"]
        );
    }

    #[test]
    fn lowercase_continuation_is_not_a_boundary() {
        assert_eq!(split_sentences("Levels fell. then rose."), ["Levels fell. then rose."]);
    }

    #[test]
    fn whitespace_runs_are_collapsed() {
        assert_eq!(split_sentences("  A  b.\n\nC d. "), ["A b.", "C d."]);
    }

    proptest! {
        #[test]
        fn join_reconstructs_normalized_input(text in "[A-Za-z0-9 .!?,()\n\"]{0,200}") {
            let sentences = split_sentences(&text);
            prop_assert_eq!(sentences.join(" "), normalize_whitespace(&text));
            for s in &sentences {
                prop_assert!(!s.is_empty());
                prop_assert_eq!(s.trim(), s.as_str());
            }
        }
    }
}
