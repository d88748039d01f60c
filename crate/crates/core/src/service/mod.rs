//! Command implementations behind the CLI: index, score, evaluate, perturb,
//! mock-serve.

pub mod config;

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub use config::{BackendSetting, BuiltinBackend, ConfigError, RunConfig};

use crate::backend::{
    BackendError, ChatBackend, EmbeddingBackend, HttpBackend, MockBackend, MockServer, MockServerOptions,
};
use crate::eval::{perturb_summary, read_scores, run_benchmark, BenchmarkReport, EvalError, PerturbError};
use crate::pipeline::{read_dataset, DatasetError, DatasetReader, SummaryPair};
use crate::qa::KeywordExtractor;
use crate::retrieval::{
    build_index_cached, chunk_document, read_corpus, ChunkError, CorpusError, IndexError, IndexManifest, Retriever,
    StoreError, MANIFEST_FILE,
};
use crate::scorer::{AnswerChoice, ClassifierChoice, ScoreError, Scorer};

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("document {doc_id}: {source}")]
    Chunk {
        doc_id: String,
        #[source]
        source: ChunkError,
    },
    #[error("duplicate document id `{0}` across corpora")]
    DuplicateDocument(String),
    #[error("index: {0}")]
    Store(#[from] StoreError),
    #[error("index: {0}")]
    Index(#[from] IndexError),
    #[error("{0}")]
    MissingIndex(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Perturb(#[from] PerturbError),
    #[error("backend: {0}")]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ServiceError {
    /// 2 for problems with user-supplied input, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            ServiceError::Config(_)
            | ServiceError::Dataset(_)
            | ServiceError::Corpus(_)
            | ServiceError::Chunk { .. }
            | ServiceError::DuplicateDocument(_)
            | ServiceError::MissingIndex(_)
            | ServiceError::Eval(_)
            | ServiceError::Store(StoreError::Invalid { .. })
            | ServiceError::Backend(BackendError::Config(_)) => 2,
            ServiceError::Store(StoreError::Index(e)) | ServiceError::Index(e) => match e {
                IndexError::BadMagic | IndexError::CacheDimension { .. } | IndexError::Corrupt(_) => 2,
                _ => 1,
            },
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> ServiceError + '_ {
    move |source| ServiceError::Io {
        path: path.to_owned(),
        source,
    }
}

/// The mock engine shared by every role configured as `mock`.
pub fn mock_engine(cfg: &RunConfig) -> MockBackend {
    MockBackend::new(cfg.mock_seed, cfg.embedding_dimension).with_theta(cfg.scoring.theta)
}

pub fn chat_backend(cfg: &RunConfig, setting: &BackendSetting) -> Result<Arc<dyn ChatBackend>, ServiceError> {
    match setting {
        BackendSetting::Profile(p) if !p.is_mock() => Ok(Arc::new(HttpBackend::new(p.clone())?)),
        _ => Ok(Arc::new(mock_engine(cfg))),
    }
}

pub fn embedding_backend(cfg: &RunConfig) -> Result<Arc<dyn EmbeddingBackend>, ServiceError> {
    match &cfg.backends.embedder {
        BackendSetting::Profile(p) if !p.is_mock() => Ok(Arc::new(
            HttpBackend::new(p.clone())?.with_dimension(cfg.embedding_dimension),
        )),
        _ => Ok(Arc::new(mock_engine(cfg))),
    }
}

fn embedder_label(cfg: &RunConfig) -> String {
    match &cfg.backends.embedder {
        BackendSetting::Profile(p) if !p.is_mock() => format!("{}@{}", p.model(), p.base_url),
        _ => format!("mock:{}", cfg.mock_seed),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndexSummary {
    pub documents: usize,
    pub chunks: usize,
    pub vectors: usize,
    pub embedded: usize,
    pub reused: usize,
    pub warnings: Vec<String>,
}

/// Chunks and embeds `corpora` into the index directory `out`, reusing
/// vectors from a previous index there when chunk contents are unchanged.
pub fn cmd_index(cfg: &RunConfig, corpora: &[PathBuf], out: &Path) -> Result<IndexSummary, ServiceError> {
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for path in corpora {
        for doc in read_corpus(path)? {
            if !seen.insert(doc.doc_id.clone()) {
                return Err(ServiceError::DuplicateDocument(doc.doc_id));
            }
            docs.push(doc);
        }
    }
    let mut chunks = Vec::new();
    let mut warnings = Vec::new();
    for doc in &docs {
        let chunked = chunk_document(doc, cfg.retrieval.chunk_limit).map_err(|source| ServiceError::Chunk {
            doc_id: doc.doc_id.clone(),
            source,
        })?;
        for w in &chunked.warnings {
            log::warn!("{w}");
        }
        warnings.extend(chunked.warnings);
        chunks.extend(chunked.chunks);
    }
    let embedder = embedding_backend(cfg)?;
    let cache = Retriever::load_cache(out, embedder.dimension());
    let (index, stats) = build_index_cached(&chunks, embedder.as_ref(), &cache)?;
    let manifest = IndexManifest {
        dimension: embedder.dimension(),
        chunk_count: chunks.len(),
        vector_count: index.len(),
        chunk_limit: cfg.retrieval.chunk_limit,
        corpora: corpora
            .iter()
            .map(|p| {
                p.file_name()
                    .map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
            })
            .collect(),
        embedder: embedder_label(cfg),
    };
    Retriever::save(out, &manifest, &chunks, &index)?;
    Ok(IndexSummary {
        documents: docs.len(),
        chunks: chunks.len(),
        vectors: index.len(),
        embedded: stats.embedded,
        reused: stats.reused,
        warnings,
    })
}

/// Opens the retrieval index for scoring. Without an index, explanation
/// sentences fall back to the abstract alone, which is only accepted for
/// offline classifiers.
pub fn open_retriever(cfg: &RunConfig, index_dir: Option<&Path>) -> Result<Option<Retriever>, ServiceError> {
    let dir = index_dir
        .map(Path::to_owned)
        .or_else(|| cfg.retrieval.index_dir.clone());
    let present = dir.as_ref().filter(|d| d.join(MANIFEST_FILE).exists());
    match present {
        Some(d) => Ok(Some(Retriever::open(d, embedding_backend(cfg)?, cfg.retrieval.k)?)),
        None => {
            let what = match &dir {
                Some(d) => format!("no index at {}", d.display()),
                None => "no index configured".to_owned(),
            };
            if !cfg.backends.classifier.is_offline() {
                return Err(ServiceError::MissingIndex(format!(
                    "{what}; an endpoint classifier needs a retrieval index (run `index` first)"
                )));
            }
            log::warn!("{what}; explanation sentences are scored against the abstract only");
            Ok(None)
        }
    }
}

pub fn build_scorer(cfg: &RunConfig, index_dir: Option<&Path>) -> Result<Scorer, ServiceError> {
    let b = &cfg.backends;
    let classifier = match &b.classifier {
        BackendSetting::Builtin(BuiltinBackend::Heuristic) => ClassifierChoice::Heuristic {
            theta: cfg.scoring.theta,
        },
        other => ClassifierChoice::Endpoint(chat_backend(cfg, other)?),
    };
    let answers = match &b.answer_extractor {
        BackendSetting::Builtin(BuiltinBackend::Heuristic) => AnswerChoice::Keyword(KeywordExtractor::default()),
        other => AnswerChoice::Endpoint(chat_backend(cfg, other)?),
    };
    Ok(Scorer {
        classifier,
        answers,
        question_generator: chat_backend(cfg, &b.question_generator)?,
        answerer: chat_backend(cfg, &b.question_answerer)?,
        embedder: embedding_backend(cfg)?,
        retriever: open_retriever(cfg, index_dir)?,
        overlap: cfg.scoring.overlap,
        filter_questions: cfg.scoring.qf_enabled,
        context_budget: cfg.retrieval.context_budget_chars,
        keep_traces: cfg.scoring.trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreSummary {
    pub summaries: usize,
    pub scored: usize,
    pub unscored: usize,
    pub failed: Vec<String>,
}

#[derive(Serialize)]
struct ScoreRunRecord<'a> {
    dataset: String,
    seed: u64,
    summary: &'a ScoreSummary,
    config: serde_json::Value,
}

/// Sidecar holding the resolved config next to a score file.
pub fn run_record_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".run.json");
    out.with_file_name(name)
}

/// Scores every summary of `dataset` and writes one JSON report per line
/// to `out`, in input order. A summary whose scoring fails is written as
/// Unscored with the error in its note, and the run continues.
pub fn cmd_score(
    cfg: &RunConfig,
    dataset: &Path,
    out: &Path,
    index_dir: Option<&Path>,
) -> Result<ScoreSummary, ServiceError> {
    let reader = DatasetReader::open(dataset)?;
    let scorer = build_scorer(cfg, index_dir)?;
    let mut w = BufWriter::new(File::create(out).map_err(io_err(out))?);
    let mut summary = ScoreSummary {
        summaries: 0,
        scored: 0,
        unscored: 0,
        failed: Vec::new(),
    };
    let batch_size = cfg.jobs.max(1) * 32;
    let mut batch: Vec<SummaryPair> = Vec::with_capacity(batch_size);
    let mut reader = reader.peekable();
    while reader.peek().is_some() {
        batch.clear();
        while batch.len() < batch_size {
            match reader.next() {
                Some(pair) => batch.push(pair?),
                None => break,
            }
        }
        for (pair, result) in batch.iter().zip(scorer.score_all(&batch, cfg.jobs)?) {
            let report = result.unwrap_or_else(|e| {
                log::warn!("summary {}: {e}", pair.id);
                summary.failed.push(pair.id.clone());
                crate::pipeline::ScoreReport::unscored(&pair.id, format!("error: {e}"))
            });
            summary.summaries += 1;
            if report.final_score.is_some() {
                summary.scored += 1;
            } else {
                summary.unscored += 1;
            }
            let line = serde_json::to_string(&report).expect("report serializes");
            writeln!(w, "{line}").map_err(io_err(out))?;
        }
    }
    w.flush().map_err(io_err(out))?;

    let record = ScoreRunRecord {
        dataset: dataset.display().to_string(),
        seed: cfg.eval.seed,
        summary: &summary,
        config: cfg.to_json(),
    };
    let sidecar = run_record_path(out);
    let text = serde_json::to_string_pretty(&record).expect("record serializes") + "\n";
    std::fs::write(&sidecar, text).map_err(io_err(&sidecar))?;
    Ok(summary)
}

/// Evaluates score files (`id,score` CSV or score-report JSONL) against the
/// dataset labels. The first file is the primary metric. Writes
/// `report.json` and `report.csv` into `out_dir`.
pub fn cmd_evaluate(
    cfg: &RunConfig,
    dataset: &Path,
    score_files: &[PathBuf],
    out_dir: &Path,
) -> Result<BenchmarkReport, ServiceError> {
    let pairs = read_dataset(dataset)?;
    let metrics = score_files.iter().map(read_scores).collect::<Result<Vec<_>, _>>()?;
    let dataset_id = dataset
        .file_stem()
        .map_or_else(|| dataset.display().to_string(), |s| s.to_string_lossy().into_owned());
    let mut report = run_benchmark(&dataset_id, &pairs, &metrics, &cfg.benchmark_settings())?;
    report.config = Some(cfg.to_json());
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let json = out_dir.join(REPORT_JSON);
    report.write_json(&json).map_err(io_err(&json))?;
    let csv = out_dir.join(REPORT_CSV);
    report.write_csv(&csv).map_err(io_err(&csv))?;
    Ok(report)
}

/// Writes a perturbed twin for every summary (after the originals when
/// `with_originals` is set). Blank summaries are skipped.
pub fn cmd_perturb(cfg: &RunConfig, dataset: &Path, out: &Path, with_originals: bool) -> Result<usize, ServiceError> {
    let pairs = read_dataset(dataset)?;
    let perturber = chat_backend(cfg, &cfg.backends.perturber)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.max(1))
        .build()
        .map_err(|e| ServiceError::Io {
            path: out.to_owned(),
            source: std::io::Error::other(e.to_string()),
        })?;
    let targets: Vec<&SummaryPair> = pairs
        .iter()
        .filter(|p| {
            let blank = p.has_blank_summary();
            if blank {
                log::warn!("summary {} is blank; no twin written", p.id);
            }
            !blank
        })
        .collect();
    let twins = pool.install(|| {
        targets
            .par_iter()
            .map(|p| perturb_summary(p, perturber.as_ref()))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let mut records: Vec<&SummaryPair> = Vec::new();
    if with_originals {
        records.extend(pairs.iter());
    }
    records.extend(twins.iter());
    crate::pipeline::write_jsonl(out, &records).map_err(io_err(out))?;
    Ok(twins.len())
}

/// Starts the HTTP mock on `addr` with the configured mock engine.
pub fn serve_mock(cfg: &RunConfig, addr: &str) -> Result<MockServer, ServiceError> {
    MockServer::start(addr, mock_engine(cfg), MockServerOptions::default()).map_err(|source| ServiceError::Io {
        path: PathBuf::from(addr),
        source,
    })
}
