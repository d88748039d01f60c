//! Run configuration, loaded from one TOML document.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendProfile, ProfileError, DEFAULT_MOCK_SEED};
use crate::eval::{BenchmarkSettings, DEFAULT_CI_LEVEL, DEFAULT_REPLICATES};
use crate::pipeline::DEFAULT_THETA;
use crate::qa::OverlapBackendKind;
use crate::retrieval::{DEFAULT_CHUNK_LIMIT, DEFAULT_CONTEXT_BUDGET, DEFAULT_TOP_K};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error("backend `{role}`: {source}")]
    Profile {
        role: String,
        #[source]
        source: ProfileError,
    },
    #[error("{field}: path {path} does not exist")]
    MissingPath { field: String, path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinBackend {
    Mock,
    Heuristic,
}

/// Per-role backend: the built-in mock, the offline heuristic, or an
/// endpoint profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BackendSetting {
    Builtin(BuiltinBackend),
    Profile(BackendProfile),
}

impl BackendSetting {
    /// True when no network endpoint is involved.
    pub fn is_offline(&self) -> bool {
        match self {
            BackendSetting::Builtin(_) => true,
            BackendSetting::Profile(p) => p.is_mock(),
        }
    }
}

fn heuristic() -> BackendSetting {
    BackendSetting::Builtin(BuiltinBackend::Heuristic)
}

fn mock() -> BackendSetting {
    BackendSetting::Builtin(BuiltinBackend::Mock)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendsConfig {
    #[serde(default = "heuristic")]
    pub classifier: BackendSetting,
    #[serde(default = "heuristic")]
    pub answer_extractor: BackendSetting,
    #[serde(default = "mock")]
    pub question_generator: BackendSetting,
    #[serde(default = "mock")]
    pub question_answerer: BackendSetting,
    #[serde(default = "mock")]
    pub embedder: BackendSetting,
    #[serde(default = "mock")]
    pub perturber: BackendSetting,
}

impl Default for BackendsConfig {
    fn default() -> Self {
        BackendsConfig {
            classifier: heuristic(),
            answer_extractor: heuristic(),
            question_generator: mock(),
            question_answerer: mock(),
            embedder: mock(),
            perturber: mock(),
        }
    }
}

impl BackendsConfig {
    pub fn roles(&self) -> [(&'static str, &BackendSetting); 6] {
        [
            ("classifier", &self.classifier),
            ("answer_extractor", &self.answer_extractor),
            ("question_generator", &self.question_generator),
            ("question_answerer", &self.question_answerer),
            ("embedder", &self.embedder),
            ("perturber", &self.perturber),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetrievalConfig {
    pub corpora: Vec<PathBuf>,
    pub index_dir: Option<PathBuf>,
    pub chunk_limit: usize,
    pub k: usize,
    pub context_budget_chars: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig {
            corpora: Vec::new(),
            index_dir: None,
            chunk_limit: DEFAULT_CHUNK_LIMIT,
            k: DEFAULT_TOP_K,
            context_budget_chars: DEFAULT_CONTEXT_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScoringConfig {
    pub overlap: OverlapBackendKind,
    pub qf_enabled: bool,
    pub theta: f64,
    pub trace: bool,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            overlap: OverlapBackendKind::default(),
            qf_enabled: true,
            theta: DEFAULT_THETA,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub replicates: usize,
    pub ci_level: f64,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            replicates: DEFAULT_REPLICATES,
            ci_level: DEFAULT_CI_LEVEL,
            alpha: 0.01,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub jobs: usize,
    pub mock_seed: u64,
    pub embedding_dimension: usize,
    pub backends: BackendsConfig,
    pub retrieval: RetrievalConfig,
    pub scoring: ScoringConfig,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            jobs: 1,
            mock_seed: DEFAULT_MOCK_SEED,
            embedding_dimension: 768,
            backends: BackendsConfig::default(),
            retrieval: RetrievalConfig::default(),
            scoring: ScoringConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_owned(),
        message: message.into(),
    }
}

impl RunConfig {
    /// Parses TOML. Relative paths are resolved against `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path, origin: &Path) -> Result<Self, ConfigError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_owned(),
            message: e.to_string(),
        })?;
        for p in &mut cfg.retrieval.corpora {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        }
        if let Some(dir) = &mut cfg.retrieval.index_dir {
            if dir.is_relative() {
                *dir = base_dir.join(&*dir);
            }
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::from_toml(&text, base, path)
    }

    /// Checks value ranges, backend roles and that input paths exist.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.jobs == 0 {
            return Err(invalid("jobs", "must be at least 1"));
        }
        if self.embedding_dimension == 0 {
            return Err(invalid("embedding_dimension", "must be at least 1"));
        }
        let r = &self.retrieval;
        if r.k == 0 {
            return Err(invalid("retrieval.k", "must be at least 1"));
        }
        if r.chunk_limit == 0 {
            return Err(invalid("retrieval.chunk_limit", "must be at least 1"));
        }
        if r.context_budget_chars == 0 {
            return Err(invalid("retrieval.context_budget_chars", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.scoring.theta) {
            return Err(invalid("scoring.theta", "must lie in [0, 1]"));
        }
        let e = &self.eval;
        if !(e.ci_level > 0.0 && e.ci_level < 1.0) {
            return Err(invalid("eval.ci_level", "must lie strictly between 0 and 1"));
        }
        if !(e.alpha > 0.0 && e.alpha < 1.0) {
            return Err(invalid("eval.alpha", "must lie strictly between 0 and 1"));
        }
        if e.replicates == 0 {
            return Err(invalid("eval.replicates", "must be at least 1"));
        }
        for (role, setting) in self.backends.roles() {
            match setting {
                BackendSetting::Builtin(BuiltinBackend::Heuristic)
                    if !matches!(role, "classifier" | "answer_extractor") =>
                {
                    return Err(invalid(
                        &format!("backends.{role}"),
                        "`heuristic` is only available for classifier and answer_extractor",
                    ));
                }
                BackendSetting::Profile(p) => p.validate().map_err(|source| ConfigError::Profile {
                    role: role.to_owned(),
                    source,
                })?,
                _ => {}
            }
        }
        for path in &r.corpora {
            if !path.exists() {
                return Err(ConfigError::MissingPath {
                    field: "retrieval.corpora".into(),
                    path: path.clone(),
                });
            }
        }
        Ok(())
    }

    /// True when every role runs offline.
    pub fn is_offline(&self) -> bool {
        self.backends.roles().iter().all(|(_, s)| s.is_offline())
    }

    pub fn benchmark_settings(&self) -> BenchmarkSettings {
        BenchmarkSettings {
            replicates: self.eval.replicates,
            ci_level: self.eval.ci_level,
            alpha: self.eval.alpha,
            seed: self.eval.seed,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        RunConfig::from_toml(text, Path::new("/base"), Path::new("run.toml"))
    }

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = parse("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert!(cfg.is_offline());
        cfg.validate().unwrap();
        assert_eq!(cfg.eval.replicates, 10_000);
        assert_eq!(cfg.eval.alpha, 0.01);
        assert_eq!(cfg.retrieval.k, 3);
    }

    #[test]
    fn profiles_and_paths() {
        let cfg = parse(
            r#"
            [backends]
            classifier = "mock"
            question_answerer = { name = "qa", base_url = "http://localhost:9/v1", api_key_env = "QA_KEY" }
            [retrieval]
            corpora = ["corpus.jsonl"]
            index_dir = "idx"
            [scoring]
            overlap = "lexical_f1"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.backends.classifier, BackendSetting::Builtin(BuiltinBackend::Mock));
        assert!(matches!(&cfg.backends.question_answerer, BackendSetting::Profile(p) if p.name == "qa"));
        assert!(!cfg.is_offline());
        assert_eq!(cfg.retrieval.corpora, [PathBuf::from("/base/corpus.jsonl")]);
        assert_eq!(cfg.retrieval.index_dir, Some(PathBuf::from("/base/idx")));
        assert_eq!(cfg.scoring.overlap, OverlapBackendKind::LexicalF1);
        assert!(matches!(cfg.validate(), Err(ConfigError::MissingPath { .. })));
    }

    #[test]
    fn rejects_bad_values() {
        assert!(matches!(
            parse("[eval]\nci_level = 1.0").unwrap().validate(),
            Err(ConfigError::Invalid { .. })
        ));
        assert!(matches!(
            parse("[retrieval]\nk = 0").unwrap().validate(),
            Err(ConfigError::Invalid { .. })
        ));
        assert!(matches!(
            parse("[backends]\nembedder = \"heuristic\"").unwrap().validate(),
            Err(ConfigError::Invalid { .. })
        ));
        assert!(matches!(parse("bogus = 1"), Err(ConfigError::Parse { .. })));
        assert!(matches!(
            parse("[backends]\nclassifier = { name = \"c\", base_url = \"mock\", temperature = -1.0 }")
                .unwrap()
                .validate(),
            Err(ConfigError::Profile { .. })
        ));
    }
}
