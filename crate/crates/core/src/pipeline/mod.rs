//! Summary data model, sentence segmentation, factuality-type
//! classification and the final weighted score.

pub mod aggregate;
pub mod classify;
pub mod dataset;
pub mod segment;
mod types;

pub use aggregate::{aggregate_score, class_average, AggregateError};
pub use classify::{classify_sentence, classify_summary, ClassifierMode, ClassifyError, DEFAULT_THETA};
pub use dataset::{read_dataset, write_jsonl, DatasetError, DatasetReader};
pub use segment::split_sentences;
pub use types::{ClassifierSource, GoldLabel, ScoreReport, SentenceType, SentenceUnit, SummaryPair};
