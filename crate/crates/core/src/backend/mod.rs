//! Uniform endpoint contract for the neural stages.
//!
//! Every generation stage talks to a [`ChatBackend`] and every embedding
//! consumer to an [`EmbeddingBackend`]. Two implementations exist: the
//! HTTP client speaking the chat-completions/embeddings wire shape, and
//! [`MockBackend`], a deterministic in-process engine that recognizes the
//! built-in prompt templates and answers them with rule-based stand-ins.

mod gate;
mod http;
mod mock;
mod profile;
pub mod prompt;
mod server;

use thiserror::Error;

pub use gate::{AdmissionGate, Permit};
pub use http::{requests_sent, HttpBackend};
pub use mock::{MockBackend, DEFAULT_MOCK_SEED};
pub use profile::{BackendProfile, ProfileError, RetryPolicy};
pub use prompt::{PromptTemplate, RenderError, RenderedPrompt};
pub use server::{MockServer, MockServerOptions, ServerStats};

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("request rejected with HTTP {status}: {body_excerpt}")]
    Request { status: u16, body_excerpt: String },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("user text of {chars} chars exceeds max_input_chars {limit}")]
    InputTooLong { chars: usize, limit: usize },
    #[error("embedding {index} has dimension {found}, expected {expected}")]
    DimensionDrift {
        expected: usize,
        found: usize,
        index: usize,
    },
    #[error("mock backend does not recognize this prompt")]
    UnknownTemplate,
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("{0}")]
    Config(String),
}

/// Chat-style text generation.
pub trait ChatBackend: Send + Sync {
    /// Returns the first choice's message text.
    fn complete(&self, system_text: &str, user_text: &str) -> Result<String, BackendError>;

    /// Guard on the user text length; callers truncate their bulky bindings
    /// to stay below it.
    fn max_input_chars(&self) -> Option<usize> {
        None
    }

    fn complete_prompt(&self, prompt: &RenderedPrompt) -> Result<String, BackendError> {
        self.complete(&prompt.system_text, &prompt.user_text)
    }
}

/// Text embedding; one vector per input, in input order.
pub trait EmbeddingBackend: Send + Sync {
    fn dimension(&self) -> usize;

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, BackendError>;
}

/// Checks that a batch has one vector per text, all of `expected` length.
pub(crate) fn check_batch(vectors: &[Vec<f32>], count: usize, expected: usize) -> Result<(), BackendError> {
    if vectors.len() != count {
        return Err(BackendError::Malformed(format!(
            "expected {count} embeddings, got {}",
            vectors.len()
        )));
    }
    for (index, v) in vectors.iter().enumerate() {
        if v.len() != expected {
            return Err(BackendError::DimensionDrift {
                expected,
                found: v.len(),
                index,
            });
        }
    }
    Ok(())
}
