use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::segment::split_sentences;
use super::types::{ClassifierSource, SentenceType, SentenceUnit, SummaryPair};
use crate::backend::prompt::{render_fitted, CLASSIFIER};
use crate::backend::{BackendError, ChatBackend};
use crate::text::{content_set, jaccard, normalize_whitespace};

/// Overlap threshold of the heuristic classifier; ties go to
/// [`SentenceType::Simplification`].
pub const DEFAULT_THETA: f64 = 0.35;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("classifier reply is neither Yes nor No: {raw:?}")]
    Unrecognized { raw: String },
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("sentence and abstract must be non-empty")]
    EmptyInput,
    #[error("sentence {index}: {source}")]
    AtSentence {
        index: usize,
        #[source]
        source: Box<ClassifyError>,
    },
    #[error("gold annotation lists {annotated} sentence types for {actual} sentences")]
    AnnotationMismatch { annotated: usize, actual: usize },
}

#[derive(Clone, Copy)]
pub enum ClassifierMode<'a> {
    Heuristic { theta: f64 },
    Endpoint(&'a dyn ChatBackend),
}

impl std::fmt::Debug for ClassifierMode<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ClassifierMode::Heuristic { theta } => write!(f, "Heuristic {{ theta: {theta} }}"),
            ClassifierMode::Endpoint(_) => f.write_str("Endpoint"),
        }
    }
}

impl ClassifierMode<'_> {
    pub fn heuristic() -> Self {
        ClassifierMode::Heuristic { theta: DEFAULT_THETA }
    }

    fn source(&self) -> ClassifierSource {
        match self {
            ClassifierMode::Heuristic { .. } => ClassifierSource::Heuristic,
            ClassifierMode::Endpoint(_) => ClassifierSource::Endpoint,
        }
    }
}

/// Abstract sentences prepared for repeated overlap queries.
#[derive(Debug, Clone)]
pub struct AbstractProfile {
    sentences: Vec<(String, BTreeSet<String>)>,
}

impl AbstractProfile {
    pub fn new(abstract_text: &str) -> Self {
        let sentences = split_sentences(abstract_text)
            .into_iter()
            .map(|s| {
                let set = content_set(&s);
                (s.to_lowercase(), set)
            })
            .collect();
        AbstractProfile { sentences }
    }

    /// Maximum content-token Jaccard between any sentence of `text` and any
    /// abstract sentence. An abstract sentence quoted verbatim inside `text`
    /// scores 1.
    pub fn overlap(&self, text: &str) -> f64 {
        let normalized = normalize_whitespace(text).to_lowercase();
        if self
            .sentences
            .iter()
            .any(|(s, _)| !s.is_empty() && normalized.contains(s.as_str()))
        {
            return 1.0;
        }
        let pieces: Vec<BTreeSet<String>> = split_sentences(text).iter().map(|s| content_set(s)).collect();
        let mut best: f64 = 0.0;
        for piece in &pieces {
            for (_, abstract_set) in &self.sentences {
                best = best.max(jaccard(piece, abstract_set));
            }
        }
        best
    }
}

/// Heuristic overlap of `sentence` against `abstract_text`.
pub fn heuristic_overlap(sentence: &str, abstract_text: &str) -> f64 {
    AbstractProfile::new(abstract_text).overlap(sentence)
}

fn type_for_overlap(overlap: f64, theta: f64) -> SentenceType {
    if overlap >= theta {
        SentenceType::Simplification
    } else {
        SentenceType::Explanation
    }
}

/// Maps a classifier reply: leading word "yes" means the sentence carries
/// information absent from the abstract.
pub fn parse_classifier_reply(raw: &str) -> Result<SentenceType, ClassifyError> {
    let word: String = raw
        .trim_start()
        .trim_start_matches(|c: char| !c.is_alphabetic())
        .chars()
        .take_while(|c| c.is_alphabetic())
        .collect::<String>()
        .to_lowercase();
    match word.as_str() {
        "yes" => Ok(SentenceType::Explanation),
        "no" => Ok(SentenceType::Simplification),
        _ => Err(ClassifyError::Unrecognized { raw: raw.to_owned() }),
    }
}

fn classify_with_profile(
    sentence: &str,
    abstract_text: &str,
    profile: &AbstractProfile,
    mode: ClassifierMode<'_>,
) -> Result<SentenceType, ClassifyError> {
    if sentence.trim().is_empty() || abstract_text.trim().is_empty() {
        return Err(ClassifyError::EmptyInput);
    }
    match mode {
        ClassifierMode::Heuristic { theta } => Ok(type_for_overlap(profile.overlap(sentence), theta)),
        ClassifierMode::Endpoint(backend) => {
            let bindings: BTreeMap<&str, &str> = [("input", sentence), ("abstract", abstract_text)].into();
            let prompt = render_fitted(CLASSIFIER, &bindings, "abstract", backend.max_input_chars())
                .map_err(BackendError::from)?;
            let reply = backend.complete_prompt(&prompt)?;
            parse_classifier_reply(&reply)
        }
    }
}

pub fn classify_sentence(
    sentence: &str,
    abstract_text: &str,
    mode: ClassifierMode<'_>,
) -> Result<SentenceType, ClassifyError> {
    classify_with_profile(sentence, abstract_text, &AbstractProfile::new(abstract_text), mode)
}

/// Segments the summary and types every sentence. Gold annotations on the
/// pair take precedence over `mode`.
pub fn classify_summary(pair: &SummaryPair, mode: ClassifierMode<'_>) -> Result<Vec<SentenceUnit>, ClassifyError> {
    let sentences = split_sentences(&pair.summary_text);
    if let Some(gold) = &pair.sentence_types {
        if gold.len() != sentences.len() {
            return Err(ClassifyError::AnnotationMismatch {
                annotated: gold.len(),
                actual: sentences.len(),
            });
        }
        return Ok(sentences
            .into_iter()
            .zip(gold)
            .enumerate()
            .map(|(index, (text, ty))| SentenceUnit {
                index,
                text,
                sentence_type: Some(*ty),
                classifier_source: Some(ClassifierSource::GoldAnnotation),
            })
            .collect());
    }
    let profile = AbstractProfile::new(&pair.abstract_text);
    sentences
        .into_iter()
        .enumerate()
        .map(|(index, text)| {
            let ty = classify_with_profile(&text, &pair.abstract_text, &profile, mode).map_err(|e| {
                ClassifyError::AtSentence {
                    index,
                    source: Box::new(e),
                }
            })?;
            Ok(SentenceUnit {
                index,
                text,
                sentence_type: Some(ty),
                classifier_source: Some(mode.source()),
            })
        })
        .collect()
}
