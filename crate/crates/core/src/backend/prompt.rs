//! Prompt templates with `{name}` placeholders.
//!
//! The classifier, answer-extraction, judge and perturbation texts are
//! reproduced byte-for-byte, trailing spaces included. The question
//! generation and question answering templates only exist to give HTTP
//! endpoints a chat-shaped request for those stages.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RenderError {
    #[error("template `{template_id}` needs a binding for placeholder `{{{name}}}`")]
    MissingPlaceholder { template_id: String, name: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub template_id: String,
    pub system_text: String,
    pub user_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedPrompt {
    pub template_id: String,
    pub system_text: String,
    pub user_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment<'a> {
    Literal(&'a str),
    Placeholder(&'a str),
}

fn is_placeholder_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

fn segments(text: &str) -> Vec<Segment<'_>> {
    let mut out = Vec::new();
    let mut literal_start = 0;
    let mut i = 0;
    while let Some(open) = text[i..].find('{').map(|o| o + i) {
        let Some(close) = text[open..].find('}').map(|c| c + open) else {
            break;
        };
        let name = &text[open + 1..close];
        if is_placeholder_name(name) {
            if open > literal_start {
                out.push(Segment::Literal(&text[literal_start..open]));
            }
            out.push(Segment::Placeholder(name));
            literal_start = close + 1;
            i = close + 1;
        } else {
            i = open + 1;
        }
    }
    if literal_start < text.len() {
        out.push(Segment::Literal(&text[literal_start..]));
    }
    out
}

impl PromptTemplate {
    pub fn new(template_id: &str, system_text: &str, user_text: &str) -> Self {
        PromptTemplate {
            template_id: template_id.to_owned(),
            system_text: system_text.to_owned(),
            user_text: user_text.to_owned(),
        }
    }

    /// Placeholder names in order of first appearance (system, then user).
    pub fn placeholders(&self) -> Vec<&str> {
        let mut names: Vec<&str> = Vec::new();
        for seg in segments(&self.system_text).into_iter().chain(segments(&self.user_text)) {
            if let Segment::Placeholder(name) = seg {
                if !names.contains(&name) {
                    names.push(name);
                }
            }
        }
        names
    }

    fn render_text(&self, text: &str, bindings: &BTreeMap<&str, &str>) -> Result<String, RenderError> {
        let mut out = String::with_capacity(text.len());
        for seg in segments(text) {
            match seg {
                Segment::Literal(lit) => out.push_str(lit),
                Segment::Placeholder(name) => {
                    let value = bindings.get(name).ok_or_else(|| RenderError::MissingPlaceholder {
                        template_id: self.template_id.clone(),
                        name: name.to_owned(),
                    })?;
                    out.push_str(value);
                }
            }
        }
        Ok(out)
    }

    /// Substitutes every placeholder; nothing else in the template changes.
    pub fn render(&self, bindings: &BTreeMap<&str, &str>) -> Result<RenderedPrompt, RenderError> {
        Ok(RenderedPrompt {
            template_id: self.template_id.clone(),
            system_text: self.render_text(&self.system_text, bindings)?,
            user_text: self.render_text(&self.user_text, bindings)?,
        })
    }

    /// Inverse of [`render`](Self::render) for the user text: recovers the
    /// bindings by matching the literal segments in order. Each placeholder
    /// takes the shortest match except the last, which takes the remainder
    /// up to any trailing literal.
    pub fn parse_user(&self, user_text: &str) -> Option<BTreeMap<String, String>> {
        let segs = segments(&self.user_text);
        let last = segs.len().saturating_sub(1);
        let mut bindings = BTreeMap::new();
        let mut rest = user_text;
        let mut pending: Option<&str> = None;
        for (i, seg) in segs.into_iter().enumerate() {
            match seg {
                Segment::Literal(lit) => match pending.take() {
                    None => rest = rest.strip_prefix(lit)?,
                    Some(name) if i == last => {
                        bindings.insert(name.to_owned(), rest.strip_suffix(lit)?.to_owned());
                        rest = "";
                    }
                    Some(name) => {
                        let at = rest.find(lit)?;
                        bindings.insert(name.to_owned(), rest[..at].to_owned());
                        rest = &rest[at + lit.len()..];
                    }
                },
                Segment::Placeholder(name) => {
                    if let Some(prev) = pending.replace(name) {
                        // adjacent placeholders cannot be separated
                        bindings.insert(prev.to_owned(), String::new());
                    }
                }
            }
        }
        match pending {
            Some(name) => {
                bindings.insert(name.to_owned(), rest.to_owned());
            }
            None if !rest.is_empty() => return None,
            None => {}
        }
        Some(bindings)
    }
}

pub const CLASSIFIER: &str = "classifier";
pub const ANSWER_EXTRACTION: &str = "answer_extraction";
pub const JUDGE: &str = "judge";
pub const PERTURBATION: &str = "perturbation";
pub const QUESTION_GENERATION: &str = "question_generation";
pub const QUESTION_ANSWERING: &str = "question_answering";

/// Literal reply of the question-answering template for unanswerable
/// questions.
pub const NO_ANSWER: &str = "NoAnswer";

const CLASSIFIER_SYSTEM: &str = concat!(
    "Annotate whether a sentence or summary includes information not present in the original abstract. \n",
    "\n",
    "The sentence or summary contains external information that is not explicitly mentioned, paraphrased, or implied in the original abstract will be labeled as 'Yes'.\n",
    "\n",
    "The sentence or summary contains information that is explicitly stated or closely paraphrased from the original abstract will be labeled as 'No'.",
);

const ANSWER_EXTRACTION_SYSTEM: &str = "QA-based metrics compare information units between the summary and source, so it is thus necessary to first extract such units, or answers, from the given summary. Please extract answers or information units from a plain language summary.";

const JUDGE_SYSTEM: &str = "Rate the factuality of the given plain language sentence or summary compared with the scientific abstract. Output a numeric score from 0 to 100, with 100 meaning the sentence is completely factually consistent with the abstract and 0 meaning the sentence is completely non-factual with the abstract.";

const PERTURBATION_SYSTEM: &str = concat!(
    "You are a data transformation assistant. You will receive a sentence from a biomedical literature. You will generate a new version of the given sentence based on the following rules for faithfulness perturbations:\n",
    "\n",
    "1. Number Swap\n",
    "Locate any numeric value(s) in the sentence and swap them with different numeric value(s).\n",
    "Example: \"infected more than 59 million people\" -> \"infected more than 64 million people\"\n",
    "\n",
    "2. Entity Swap\n",
    "Locate a key entity (e.g., virus name, drug name, organization) in the sentence and swap it with a different entity.\n",
    "Example: \"coronavirus 2 (SARS-CoV-2)\" -> \"canine adenovirus (CAV-2)\"\n",
    "\n",
    "3. Synonym Verb Swap\n",
    "Identify a key verb in the sentence and replace it with a near-synonym or related verb that changes the nuance or meaning slightly.\n",
    "Example: \"killed more than one of them\" -> \"stamped out more than one of them\"\n",
    "\n",
    "4. Hypernym/Antonym Swap\n",
    "Select a word and replace it with either a hypernym (a more general term) or an antonym (opposite meaning), as appropriate.\n",
    "Example (antonym): \"killed more than one of them\" -> \"saved more than one of them\"\n",
    "Example (hypernym): \"dog\" -> \"animal\" (if relevant)\n",
    "\n",
    "5. Negation\n",
    "Negate a key part of the sentence to flip its meaning.\n",
    "Example: \"has infected more than 59 million people\" -> \"hasn't infected more than 59 million people\" or \"has not infected more than 59 million people\"\n",
    "\n",
    "Your task:\n",
    "Read each sentence, generate a new sentence based on one of the five types of perturbation stratigies (Number Swap, Entity Swap, Synonym Verb Swap, Hypernym/Antonym Swap, Negation) above.\n",
    "Return the perturbation sentence. \n",
    "\n",
    "Do not change the rest parts of the sentence except for the perturbation content. For example, the original sentence is \"The skin patch and the vaginal (birth canal) ring are two methods of birth control.\" The perturbation sentence should be \"The skin patch and the vaginal (birth canal) ring are five methods of birth control.\"",
);

const QUESTION_GENERATION_SYSTEM: &str = "Write one question about the given sentence whose answer is exactly the given answer span. Output only the question.";

const QUESTION_ANSWERING_SYSTEM: &str = "Answer the question with a span copied verbatim from the context. If the context does not contain the answer, output NoAnswer.";

static BUILTIN: LazyLock<Vec<PromptTemplate>> = LazyLock::new(|| {
    vec![
        PromptTemplate::new(
            CLASSIFIER,
            CLASSIFIER_SYSTEM,
            "Sentence or summary: {input}\nOriginal abstract: {abstract}",
        ),
        PromptTemplate::new(
            ANSWER_EXTRACTION,
            ANSWER_EXTRACTION_SYSTEM,
            "Extract a comma-separated list of the most important keywords from the following text: {input} ",
        ),
        PromptTemplate::new(
            JUDGE,
            JUDGE_SYSTEM,
            "Sentence or summary: {input}\nOriginal abstract: {abstract}\nFactuality score (only output a numeric score): {score}",
        ),
        PromptTemplate::new(
            PERTURBATION,
            PERTURBATION_SYSTEM,
            "Sentence: {input}\nPerturbation sentence: {sentence}",
        ),
        PromptTemplate::new(
            QUESTION_GENERATION,
            QUESTION_GENERATION_SYSTEM,
            "Answer: {answer}\nSentence: {input}",
        ),
        PromptTemplate::new(
            QUESTION_ANSWERING,
            QUESTION_ANSWERING_SYSTEM,
            "Context: {context}\nQuestion: {question}",
        ),
    ]
});

pub fn builtin_templates() -> &'static [PromptTemplate] {
    &BUILTIN
}

/// Looks up a built-in template by id. Panics on unknown ids, which are
/// programming errors.
pub fn template(template_id: &str) -> &'static PromptTemplate {
    BUILTIN
        .iter()
        .find(|t| t.template_id == template_id)
        .unwrap_or_else(|| panic!("no built-in template `{template_id}`"))
}

/// Identifies which built-in template produced a system text.
pub fn recognize(system_text: &str) -> Option<&'static PromptTemplate> {
    BUILTIN.iter().find(|t| t.system_text == system_text)
}

/// Renders a built-in template, truncating the binding named `shrink` so the
/// user text fits within `max_input_chars`.
pub fn render_fitted(
    template_id: &str,
    bindings: &BTreeMap<&str, &str>,
    shrink: &str,
    max_input_chars: Option<usize>,
) -> Result<RenderedPrompt, RenderError> {
    let tpl = template(template_id);
    let rendered = tpl.render(bindings)?;
    let Some(limit) = max_input_chars else {
        return Ok(rendered);
    };
    let total = rendered.user_text.chars().count();
    if total <= limit {
        return Ok(rendered);
    }
    let Some(value) = bindings.get(shrink) else {
        return Ok(rendered);
    };
    let excess = total - limit;
    let keep = value.chars().count().saturating_sub(excess);
    let mut fitted = bindings.clone();
    let truncated = crate::text::truncate_chars(value, keep);
    fitted.insert(shrink, truncated);
    tpl.render(&fitted)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bind<'a>(pairs: &[(&'a str, &'a str)]) -> BTreeMap<&'a str, &'a str> {
        pairs.iter().copied().collect()
    }

    #[test]
    fn classifier_user_text_layout() {
        let r = template(CLASSIFIER)
            .render(&bind(&[("input", "S"), ("abstract", "A")]))
            .unwrap();
        assert!(r.user_text.ends_with("Sentence or summary: S\nOriginal abstract: A"));
    }

    #[test]
    fn missing_binding_is_named() {
        let err = template(CLASSIFIER).render(&bind(&[("input", "S")])).unwrap_err();
        assert_eq!(
            err,
            RenderError::MissingPlaceholder {
                template_id: CLASSIFIER.into(),
                name: "abstract".into()
            }
        );
    }

    #[test]
    fn template_without_placeholders_is_verbatim() {
        let t = PromptTemplate::new("plain", "sys {not a placeholder}", "user text {}");
        let r = t.render(&BTreeMap::new()).unwrap();
        assert_eq!(r.system_text, "sys {not a placeholder}");
        assert_eq!(r.user_text, "user text {}");
        assert!(t.placeholders().is_empty());
    }

    #[test]
    fn placeholders_listed_in_order() {
        assert_eq!(template(JUDGE).placeholders(), ["input", "abstract", "score"]);
    }

    #[test]
    fn parse_user_inverts_render() {
        let tpl = template(CLASSIFIER);
        let r = tpl
            .render(&bind(&[("input", "Gout hurts."), ("abstract", "Line one.\nLine two.")]))
            .unwrap();
        let parsed = tpl.parse_user(&r.user_text).unwrap();
        assert_eq!(parsed["input"], "Gout hurts.");
        assert_eq!(parsed["abstract"], "Line one.\nLine two.");
        assert!(template(ANSWER_EXTRACTION).parse_user("unrelated").is_none());
    }

    #[test]
    fn trailing_literal_keeps_multi_word_binding() {
        let tpl = template(ANSWER_EXTRACTION);
        let r = tpl
            .render(&bind(&[("input", "Statins lower blood cholesterol.")]))
            .unwrap();
        assert_eq!(
            tpl.parse_user(&r.user_text).unwrap()["input"],
            "Statins lower blood cholesterol."
        );
    }

    proptest::proptest! {
        #[test]
        fn parse_user_round_trips_every_template(values in proptest::collection::vec("[a-z .,]{0,40}", 3)) {
            for tpl in builtin_templates() {
                let names = tpl.placeholders();
                let b: BTreeMap<&str, &str> = names.iter().zip(&values).map(|(n, v)| (*n, v.as_str())).collect();
                let r = tpl.render(&b).unwrap();
                let parsed = tpl.parse_user(&r.user_text).unwrap();
                for (n, v) in &b {
                    proptest::prop_assert_eq!(&parsed[*n], v);
                }
            }
        }
    }

    #[test]
    fn recognize_by_system_text() {
        for t in builtin_templates() {
            assert_eq!(recognize(&t.system_text).unwrap().template_id, t.template_id);
        }
        assert!(recognize("something else").is_none());
    }

    #[test]
    fn fitted_render_truncates_named_binding() {
        let long = "x".repeat(500);
        let r = render_fitted(
            CLASSIFIER,
            &bind(&[("input", "S"), ("abstract", &long)]),
            "abstract",
            Some(100),
        )
        .unwrap();
        assert_eq!(r.user_text.chars().count(), 100);
        assert!(r.user_text.starts_with("Sentence or summary: S\n"));
    }
}
