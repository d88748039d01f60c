#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Mutex;

use plaincheck_core::backend::{BackendError, ChatBackend};

pub const SAMPLE_INPUT: &str = "Statins lower blood cholesterol.";
pub const SAMPLE_ABSTRACT: &str = "Statin therapy reduced LDL cholesterol by 30 percent in 120 adults.";

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Expected (system, user) texts for a template.
pub fn golden(name: &str) -> (String, String) {
    let read = |part: &str| {
        let path = golden_dir().join(format!("{name}.{part}.txt"));
        std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
    };
    (read("system"), read("user"))
}

/// Chat backend that records every prompt and answers with a fixed reply.
pub struct Recorder {
    pub reply: String,
    pub calls: Mutex<Vec<(String, String)>>,
}

impl Recorder {
    pub fn new(reply: &str) -> Self {
        Recorder {
            reply: reply.to_owned(),
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> Vec<(String, String)> {
        self.calls.lock().unwrap().clone()
    }
}

impl ChatBackend for Recorder {
    fn complete(&self, system_text: &str, user_text: &str) -> Result<String, BackendError> {
        self.calls
            .lock()
            .unwrap()
            .push((system_text.to_owned(), user_text.to_owned()));
        Ok(self.reply.clone())
    }
}

/// Prompts actually sent by the pipeline stages for the sample bindings,
/// checked against the golden files. Returns the first mismatch.
pub fn check_golden_prompts() -> Result<(), String> {
    use plaincheck_core::eval::{judge_score, perturb_summary};
    use plaincheck_core::pipeline::{classify_sentence, ClassifierMode, SummaryPair};
    use plaincheck_core::qa::{extract_answers, AnswerMode};

    let mut sent = Vec::new();

    let r = Recorder::new("No");
    classify_sentence(SAMPLE_INPUT, SAMPLE_ABSTRACT, ClassifierMode::Endpoint(&r)).map_err(|e| e.to_string())?;
    sent.push(("classifier", r.calls()));

    let r = Recorder::new("Statins, cholesterol");
    extract_answers(SAMPLE_INPUT, AnswerMode::Endpoint(&r)).map_err(|e| e.to_string())?;
    sent.push(("answer_extraction", r.calls()));

    let r = Recorder::new("80");
    judge_score(SAMPLE_INPUT, SAMPLE_ABSTRACT, &r).map_err(|e| e.to_string())?;
    sent.push(("judge", r.calls()));

    let r = Recorder::new("Statins raise blood cholesterol.");
    perturb_summary(&SummaryPair::new("g", SAMPLE_INPUT, SAMPLE_ABSTRACT), &r).map_err(|e| e.to_string())?;
    sent.push(("perturbation", r.calls()));

    for (name, calls) in sent {
        let want = golden(name);
        if calls.len() != 1 {
            return Err(format!("{name}: expected one request, saw {}", calls.len()));
        }
        if calls[0].0 != want.0 {
            return Err(format!(
                "{name}: system text differs\n--- sent\n{}\n--- golden\n{}",
                calls[0].0, want.0
            ));
        }
        if calls[0].1 != want.1 {
            return Err(format!(
                "{name}: user text differs\n--- sent\n{:?}\n--- golden\n{:?}",
                calls[0].1, want.1
            ));
        }
    }
    Ok(())
}
