use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use log::{debug, warn};
use serde_json::{json, Value};

use super::{check_batch, AdmissionGate, BackendError, BackendProfile, ChatBackend, EmbeddingBackend};

static REQUESTS_SENT: AtomicU64 = AtomicU64::new(0);

/// Number of HTTP requests this process has put on the wire.
pub fn requests_sent() -> u64 {
    REQUESTS_SENT.load(Ordering::SeqCst)
}

const EXCERPT_CHARS: usize = 300;

/// Client for chat-completions and embeddings endpoints.
pub struct HttpBackend {
    profile: BackendProfile,
    agent: ureq::Agent,
    gate: AdmissionGate,
    api_key: Option<String>,
    dimension: usize,
}

enum Attempt {
    Done(Value),
    Retry(String),
    Fail(BackendError),
}

impl HttpBackend {
    /// Reads the bearer token from the profile's environment variable.
    /// A missing variable is an error; an unset `api_key_env` sends no
    /// Authorization header.
    pub fn new(profile: BackendProfile) -> Result<Self, BackendError> {
        profile.validate().map_err(|e| BackendError::Config(e.to_string()))?;
        let api_key = match &profile.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                BackendError::Config(format!(
                    "profile `{}`: environment variable {var} is not set",
                    profile.name
                ))
            })?),
            None => None,
        };
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(profile.timeout_ms)))
            .http_status_as_error(false)
            .build();
        Ok(HttpBackend {
            gate: AdmissionGate::new(profile.in_flight_limit),
            agent: config.into(),
            api_key,
            dimension: 768,
            profile,
        })
    }

    /// Sets the embedding dimension every response must have.
    pub fn with_dimension(mut self, dimension: usize) -> Self {
        self.dimension = dimension;
        self
    }

    pub fn profile(&self) -> &BackendProfile {
        &self.profile
    }

    fn url(&self, route: &str) -> String {
        format!("{}/{route}", self.profile.base_url.trim_end_matches('/'))
    }

    fn attempt(&self, url: &str, body: &Value) -> Attempt {
        REQUESTS_SENT.fetch_add(1, Ordering::SeqCst);
        let mut request = self.agent.post(url);
        if let Some(key) = &self.api_key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = match request.send_json(body) {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = response.status().as_u16();
        let text = match response.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        match status {
            200..=299 => match serde_json::from_str(&text) {
                Ok(v) => Attempt::Done(v),
                Err(e) => Attempt::Fail(BackendError::Malformed(e.to_string())),
            },
            500..=599 => Attempt::Retry(format!("HTTP {status}")),
            _ => Attempt::Fail(BackendError::Request {
                status,
                body_excerpt: text.chars().take(EXCERPT_CHARS).collect(),
            }),
        }
    }

    fn post(&self, route: &str, body: &Value) -> Result<Value, BackendError> {
        let url = self.url(route);
        let _permit = self.gate.acquire();
        let policy = &self.profile.retry;
        let mut last = String::new();
        for attempt in 0..policy.max_attempts {
            if attempt > 0 {
                let delay = policy.delay_ms(attempt as usize - 1);
                debug!("retrying {url} in {delay} ms after: {last}");
                std::thread::sleep(Duration::from_millis(delay));
            }
            match self.attempt(&url, body) {
                Attempt::Done(v) => return Ok(v),
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(msg) => {
                    warn!("{} attempt {} failed: {msg}", self.profile.name, attempt + 1);
                    last = msg;
                }
            }
        }
        Err(BackendError::Transport {
            attempts: policy.max_attempts,
            message: last,
        })
    }
}

impl ChatBackend for HttpBackend {
    fn complete(&self, system_text: &str, user_text: &str) -> Result<String, BackendError> {
        let chars = user_text.chars().count();
        if chars > self.profile.max_input_chars {
            return Err(BackendError::InputTooLong {
                chars,
                limit: self.profile.max_input_chars,
            });
        }
        let body = json!({
            "model": self.profile.model(),
            "messages": [
                {"role": "system", "content": system_text},
                {"role": "user", "content": user_text},
            ],
            "temperature": self.profile.temperature,
            "max_tokens": self.profile.max_tokens,
        });
        let reply = self.post("chat/completions", &body)?;
        reply
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_owned)
            .ok_or_else(|| BackendError::Malformed("missing choices[0].message.content".into()))
    }

    fn max_input_chars(&self) -> Option<usize> {
        Some(self.profile.max_input_chars)
    }
}

impl EmbeddingBackend for HttpBackend {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, BackendError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let body = json!({"model": self.profile.model(), "input": texts});
        let reply = self.post("embeddings", &body)?;
        let data = reply
            .get("data")
            .and_then(Value::as_array)
            .ok_or_else(|| BackendError::Malformed("missing data array".into()))?;
        let mut slots: Vec<Option<Vec<f32>>> = vec![None; texts.len()];
        for (position, item) in data.iter().enumerate() {
            let index = item
                .get("index")
                .and_then(Value::as_u64)
                .map_or(position, |i| i as usize);
            let values = item
                .get("embedding")
                .and_then(Value::as_array)
                .ok_or_else(|| BackendError::Malformed("missing embedding".into()))?
                .iter()
                .map(|x| x.as_f64().map(|f| f as f32))
                .collect::<Option<Vec<f32>>>()
                .ok_or_else(|| BackendError::Malformed("non-numeric embedding".into()))?;
            let slot = slots
                .get_mut(index)
                .ok_or_else(|| BackendError::Malformed(format!("embedding index {index} out of range")))?;
            *slot = Some(values);
        }
        let vectors = slots
            .into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or_else(|| BackendError::Malformed(format!("no embedding for input {i}"))))
            .collect::<Result<Vec<_>, _>>()?;
        check_batch(&vectors, texts.len(), self.dimension)?;
        Ok(vectors)
    }
}
