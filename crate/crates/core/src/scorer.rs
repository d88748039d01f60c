//! Summary-level scoring: classify sentences, run the QA chain per
//! sentence, combine class averages.

use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::backend::{ChatBackend, EmbeddingBackend, MockBackend};
use crate::pipeline::{
    aggregate_score, classify_summary, AggregateError, ClassifierMode, ClassifyError, ScoreReport, SentenceType,
    SummaryPair, DEFAULT_THETA,
};
use crate::qa::{AnswerMode, KeywordExtractor, OverlapBackendKind, QaError, QaStages};
use crate::retrieval::{Retriever, DEFAULT_CONTEXT_BUDGET};

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error("sentence {index}: {source}")]
    Qa {
        index: usize,
        #[source]
        source: QaError,
    },
    #[error(transparent)]
    Aggregate(#[from] AggregateError),
    #[error("worker pool: {0}")]
    Pool(String),
}

pub enum ClassifierChoice {
    Heuristic { theta: f64 },
    Endpoint(Arc<dyn ChatBackend>),
}

pub enum AnswerChoice {
    Keyword(KeywordExtractor),
    Endpoint(Arc<dyn ChatBackend>),
}

pub struct Scorer {
    pub classifier: ClassifierChoice,
    pub answers: AnswerChoice,
    pub question_generator: Arc<dyn ChatBackend>,
    pub answerer: Arc<dyn ChatBackend>,
    pub embedder: Arc<dyn EmbeddingBackend>,
    pub retriever: Option<Retriever>,
    pub overlap: OverlapBackendKind,
    pub filter_questions: bool,
    pub context_budget: usize,
    /// Keep per-sentence traces in the reports.
    pub keep_traces: bool,
}

impl Scorer {
    /// Fully offline scorer: heuristic classifier, keyword answers, mock
    /// question generation, answering and embeddings.
    pub fn offline(mock: MockBackend, overlap: OverlapBackendKind, retriever: Option<Retriever>) -> Self {
        let mock = Arc::new(mock);
        Scorer {
            classifier: ClassifierChoice::Heuristic { theta: DEFAULT_THETA },
            answers: AnswerChoice::Keyword(KeywordExtractor::default()),
            question_generator: mock.clone(),
            answerer: mock.clone(),
            embedder: mock,
            retriever,
            overlap,
            filter_questions: true,
            context_budget: DEFAULT_CONTEXT_BUDGET,
            keep_traces: false,
        }
    }

    pub fn score_pair(&self, pair: &SummaryPair) -> Result<ScoreReport, ScoreError> {
        if pair.has_blank_summary() {
            return Ok(ScoreReport::unscored(&pair.id, "blank summary"));
        }
        let mode = match &self.classifier {
            ClassifierChoice::Heuristic { theta } => ClassifierMode::Heuristic { theta: *theta },
            ClassifierChoice::Endpoint(b) => ClassifierMode::Endpoint(b.as_ref()),
        };
        let units = classify_summary(pair, mode)?;
        let answers = match &self.answers {
            AnswerChoice::Keyword(k) => AnswerMode::Keyword(k),
            AnswerChoice::Endpoint(b) => AnswerMode::Endpoint(b.as_ref()),
        };
        let stages = QaStages {
            answers,
            question_generator: self.question_generator.as_ref(),
            answerer: self.answerer.as_ref(),
            embedder: self.embedder.as_ref(),
            overlap: self.overlap,
            filter_questions: self.filter_questions,
            retriever: self.retriever.as_ref(),
            context_budget: self.context_budget,
        };
        let traces = units
            .iter()
            .map(|u| {
                stages
                    .run_sentence(u, &pair.abstract_text)
                    .map_err(|source| ScoreError::Qa { index: u.index, source })
            })
            .collect::<Result<Vec<_>, _>>()?;

        let class_scores = |ty: SentenceType| -> (usize, Vec<f64>) {
            let of_type: Vec<_> = traces.iter().filter(|t| t.sentence_type == ty).collect();
            (of_type.len(), of_type.iter().filter_map(|t| t.score).collect())
        };
        let (n_s, s_scores) = class_scores(SentenceType::Simplification);
        let (n_e, e_scores) = class_scores(SentenceType::Explanation);
        let s_avg = crate::pipeline::class_average(&s_scores);
        let e_avg = crate::pipeline::class_average(&e_scores);
        let final_score = aggregate_score(s_avg, s_scores.len(), e_avg, e_scores.len())?;
        Ok(ScoreReport {
            summary_id: pair.id.clone(),
            s_avg,
            e_avg,
            n_s,
            n_e,
            n_s_scored: s_scores.len(),
            n_e_scored: e_scores.len(),
            final_score,
            sentence_details: if self.keep_traces { traces } else { Vec::new() },
            note: final_score.is_none().then(|| "no scored sentences".to_owned()),
        })
    }

    /// Scores `pairs` on `jobs` worker threads; results keep input order.
    pub fn score_all(
        &self,
        pairs: &[SummaryPair],
        jobs: usize,
    ) -> Result<Vec<Result<ScoreReport, ScoreError>>, ScoreError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| ScoreError::Pool(e.to_string()))?;
        Ok(pool.install(|| pairs.par_iter().map(|p| self.score_pair(p)).collect()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_equal_to_abstract_scores_one() {
        let abstract_text = "Limits on sugary drinks in schools reduced intake by 12 percent. \
                             Children drank more water during the 6 month trial.";
        let pair = SummaryPair::new("p", abstract_text, abstract_text);
        let scorer = Scorer::offline(MockBackend::default(), OverlapBackendKind::LexicalF1, None);
        let r = scorer.score_pair(&pair).unwrap();
        assert_eq!(r.n_s, 2);
        assert_eq!(r.n_e, 0);
        assert_eq!(r.final_score, Some(1.0), "{r:#?}");
    }

    #[test]
    fn blank_summary_is_unscored() {
        let scorer = Scorer::offline(MockBackend::default(), OverlapBackendKind::LexicalF1, None);
        let r = scorer.score_pair(&SummaryPair::new("b", "   ", "Abstract.")).unwrap();
        assert_eq!(r.final_score, None);
        assert_eq!(r.note.as_deref(), Some("blank summary"));
    }

    #[test]
    fn parallel_order_matches_input() {
        let scorer = Scorer::offline(MockBackend::new(1, 32), OverlapBackendKind::LexicalF1, None);
        let pairs: Vec<SummaryPair> = (0..12)
            .map(|i| {
                SummaryPair::new(
                    format!("id{i}"),
                    format!("Trial {i} enrolled adults."),
                    "Trial 3 enrolled adults.",
                )
            })
            .collect();
        let got = scorer.score_all(&pairs, 4).unwrap();
        let ids: Vec<String> = got.into_iter().map(|r| r.unwrap().summary_id).collect();
        let want: Vec<String> = pairs.iter().map(|p| p.id.clone()).collect();
        assert_eq!(ids, want);
    }
}
