use serde::{Deserialize, Serialize};

use crate::qa::SentenceTrace;

/// Whether a summary is consistent with its source. Encoded as `1` / `0` in
/// dataset files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum GoldLabel {
    Factual,
    NonFactual,
}

impl From<GoldLabel> for u8 {
    fn from(label: GoldLabel) -> u8 {
        match label {
            GoldLabel::Factual => 1,
            GoldLabel::NonFactual => 0,
        }
    }
}

impl TryFrom<u8> for GoldLabel {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(GoldLabel::Factual),
            0 => Ok(GoldLabel::NonFactual),
            other => Err(format!("label must be 0 or 1, got {other}")),
        }
    }
}

impl GoldLabel {
    pub fn is_positive(self) -> bool {
        self == GoldLabel::Factual
    }
}

/// Factuality type of one plain-language sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SentenceType {
    /// Content derivable from the source abstract.
    Simplification,
    /// Elaborative content that needs external knowledge to verify.
    Explanation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierSource {
    Endpoint,
    Heuristic,
    GoldAnnotation,
}

/// One summary-abstract pair under evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryPair {
    pub id: String,
    #[serde(rename = "summary")]
    pub summary_text: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    #[serde(rename = "label", default, skip_serializing_if = "Option::is_none")]
    pub gold_label: Option<GoldLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentence_types: Option<Vec<SentenceType>>,
    /// Unknown fields, preserved on round trip.
    #[serde(flatten)]
    pub metadata: serde_json::Map<String, serde_json::Value>,
}

impl SummaryPair {
    pub fn new(id: impl Into<String>, summary: impl Into<String>, abstract_text: impl Into<String>) -> Self {
        SummaryPair {
            id: id.into(),
            summary_text: summary.into(),
            abstract_text: abstract_text.into(),
            gold_label: None,
            sentence_types: None,
            metadata: serde_json::Map::new(),
        }
    }

    pub fn with_label(mut self, label: GoldLabel) -> Self {
        self.gold_label = Some(label);
        self
    }

    pub fn has_blank_summary(&self) -> bool {
        self.summary_text.trim().is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceUnit {
    pub index: usize,
    pub text: String,
    pub sentence_type: Option<SentenceType>,
    pub classifier_source: Option<ClassifierSource>,
}

/// Per-summary score breakdown. `None` averages and scores mean Unscored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub summary_id: String,
    pub s_avg: Option<f64>,
    pub e_avg: Option<f64>,
    pub n_s: usize,
    pub n_e: usize,
    pub n_s_scored: usize,
    pub n_e_scored: usize,
    pub final_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sentence_details: Vec<SentenceTrace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ScoreReport {
    pub fn unscored(summary_id: impl Into<String>, note: impl Into<String>) -> Self {
        ScoreReport {
            summary_id: summary_id.into(),
            s_avg: None,
            e_avg: None,
            n_s: 0,
            n_e: 0,
            n_s_scored: 0,
            n_e_scored: 0,
            final_score: None,
            sentence_details: Vec::new(),
            note: Some(note.into()),
        }
    }
}
