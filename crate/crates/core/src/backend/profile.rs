use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProfileError {
    #[error("profile `{0}`: temperature must be >= 0")]
    Temperature(String),
    #[error("profile `{0}`: max_tokens must be >= 1")]
    MaxTokens(String),
    #[error("profile `{0}`: in_flight_limit must be >= 1")]
    InFlight(String),
    #[error("profile `{0}`: retry.max_attempts must be >= 1")]
    Attempts(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    /// Delay before retry `i` is `backoff_ms[min(i, len - 1)]`.
    pub backoff_ms: Vec<u64>,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            backoff_ms: vec![500, 2000],
        }
    }
}

impl RetryPolicy {
    pub fn delay_ms(&self, retry_index: usize) -> u64 {
        match self.backoff_ms.len() {
            0 => 0,
            n => self.backoff_ms[retry_index.min(n - 1)],
        }
    }
}

fn default_max_tokens() -> u32 {
    512
}
fn default_max_input_chars() -> usize {
    2048
}
fn default_in_flight() -> usize {
    4
}
fn default_timeout_ms() -> u64 {
    30_000
}

/// Connection and sampling settings for one model endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendProfile {
    pub name: String,
    /// Endpoint root such as `http://localhost:8000/v1`, or `mock`.
    pub base_url: String,
    /// Model identifier sent on the wire; defaults to `name`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    /// Name of the environment variable holding the bearer token.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default = "default_max_input_chars")]
    pub max_input_chars: usize,
    #[serde(default = "default_in_flight")]
    pub in_flight_limit: usize,
    #[serde(default)]
    pub retry: RetryPolicy,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

impl BackendProfile {
    pub fn new(name: &str, base_url: &str) -> Self {
        BackendProfile {
            name: name.to_owned(),
            base_url: base_url.to_owned(),
            model: None,
            api_key_env: None,
            temperature: 0.0,
            max_tokens: default_max_tokens(),
            max_input_chars: default_max_input_chars(),
            in_flight_limit: default_in_flight(),
            retry: RetryPolicy::default(),
            timeout_ms: default_timeout_ms(),
        }
    }

    pub fn is_mock(&self) -> bool {
        self.base_url == "mock"
    }

    pub fn model(&self) -> &str {
        self.model.as_deref().unwrap_or(&self.name)
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(ProfileError::Temperature(self.name.clone()));
        }
        if self.max_tokens < 1 {
            return Err(ProfileError::MaxTokens(self.name.clone()));
        }
        if self.in_flight_limit < 1 {
            return Err(ProfileError::InFlight(self.name.clone()));
        }
        if self.retry.max_attempts < 1 {
            return Err(ProfileError::Attempts(self.name.clone()));
        }
        Ok(())
    }
}
