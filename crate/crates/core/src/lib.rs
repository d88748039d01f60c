//! QA-based factual consistency scoring for plain-language summaries.
//!
//! Each summary sentence is classified as a simplification of the source
//! abstract or an elaborative explanation. Keyphrases extracted from the
//! sentence become gold answers; generated questions are answered against
//! the abstract (plus retrieved reference snippets for explanations), and
//! answer overlap yields per-sentence scores that are combined into one
//! summary score. The [`eval`] module measures how well such scores
//! separate factual from non-factual summaries.

pub mod backend;
pub mod eval;
pub mod pipeline;
pub mod qa;
pub mod retrieval;
pub mod scorer;
pub mod service;
pub mod synthetic;
pub mod text;

pub use pipeline::{ScoreReport, SentenceType, SentenceUnit, SummaryPair};
pub use scorer::{ScoreError, Scorer};
pub use service::{RunConfig, ServiceError};
