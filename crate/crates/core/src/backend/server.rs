//! In-process HTTP server exposing [`MockBackend`] on the
//! `/chat/completions` and `/embeddings` routes.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use log::{debug, info};
use serde_json::{json, Value};
use tiny_http::{Header, Method, Response, Server};

use super::{BackendError, ChatBackend, EmbeddingBackend, MockBackend};

/// Fault injection and pacing knobs for tests.
#[derive(Debug, Clone, Default)]
pub struct MockServerOptions {
    /// The first `fail_first` requests are answered with `fail_status`.
    pub fail_first: usize,
    pub fail_status: u16,
    /// Artificial latency per request.
    pub delay: Duration,
}

#[derive(Debug, Default)]
pub struct ServerStats {
    pub requests: AtomicUsize,
    pub active: AtomicUsize,
    pub max_active: AtomicUsize,
}

pub struct MockServer {
    addr: SocketAddr,
    server: Arc<Server>,
    stats: Arc<ServerStats>,
    worker: Option<JoinHandle<()>>,
}

struct Shared {
    engine: MockBackend,
    options: MockServerOptions,
    stats: Arc<ServerStats>,
}

impl MockServer {
    /// Binds `addr` (use port 0 for an ephemeral port) and serves on a
    /// background thread until dropped.
    pub fn start(addr: &str, engine: MockBackend, options: MockServerOptions) -> std::io::Result<Self> {
        let server = Arc::new(Server::http(addr).map_err(std::io::Error::other)?);
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| std::io::Error::other("not an IP listener"))?;
        let stats = Arc::new(ServerStats::default());
        let shared = Arc::new(Shared {
            engine,
            options,
            stats: stats.clone(),
        });
        let srv = server.clone();
        let worker = std::thread::spawn(move || {
            for request in srv.incoming_requests() {
                let shared = shared.clone();
                std::thread::spawn(move || handle(request, &shared));
            }
        });
        info!("mock server listening on http://{addr}");
        Ok(MockServer {
            addr,
            server,
            stats,
            worker: Some(worker),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn stats(&self) -> &ServerStats {
        &self.stats
    }

    /// Blocks the calling thread for the lifetime of the server.
    pub fn join(mut self) {
        if let Some(worker) = self.worker.take() {
            let _ = worker.join();
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(worker) = self.worker.take() {
            let _ = worker.join();
        }
    }
}

fn handle(mut request: tiny_http::Request, shared: &Shared) {
    let stats = &shared.stats;
    let seen = stats.requests.fetch_add(1, Ordering::SeqCst);
    let now = stats.active.fetch_add(1, Ordering::SeqCst) + 1;
    stats.max_active.fetch_max(now, Ordering::SeqCst);
    if !shared.options.delay.is_zero() {
        std::thread::sleep(shared.options.delay);
    }
    let (status, body) = if seen < shared.options.fail_first {
        (
            shared.options.fail_status,
            json!({"error": {"message": "injected failure"}}),
        )
    } else {
        let mut raw = String::new();
        match request.as_reader().read_to_string(&mut raw) {
            Ok(_) => route(request.method(), request.url(), &raw, &shared.engine),
            Err(e) => (400, json!({"error": {"message": e.to_string()}})),
        }
    };
    debug!("mock server {} {} -> {status}", request.method(), request.url());
    let header = Header::from_bytes("Content-Type", "application/json").expect("static header");
    let response = Response::from_string(body.to_string())
        .with_status_code(status)
        .with_header(header);
    stats.active.fetch_sub(1, Ordering::SeqCst);
    let _ = request.respond(response);
}

fn error(status: u16, message: impl Into<String>) -> (u16, Value) {
    (status, json!({"error": {"message": message.into()}}))
}

fn route(method: &Method, url: &str, raw: &str, engine: &MockBackend) -> (u16, Value) {
    if *method != Method::Post {
        return error(405, "only POST is supported");
    }
    let body: Value = match serde_json::from_str(raw) {
        Ok(v) => v,
        Err(e) => return error(400, format!("invalid JSON: {e}")),
    };
    let path = url.split('?').next().unwrap_or(url);
    if path.ends_with("/chat/completions") {
        chat(&body, engine)
    } else if path.ends_with("/embeddings") {
        embeddings(&body, engine)
    } else {
        error(404, format!("no route for {path}"))
    }
}

fn chat(body: &Value, engine: &MockBackend) -> (u16, Value) {
    let Some(messages) = body.get("messages").and_then(Value::as_array) else {
        return error(400, "missing messages");
    };
    let content_of = |roles: &[&str]| {
        messages
            .iter()
            .rev()
            .filter(|m| {
                m.get("role")
                    .and_then(Value::as_str)
                    .is_some_and(|r| roles.contains(&r))
            })
            .find_map(|m| m.get("content").and_then(Value::as_str))
            .unwrap_or("")
            .to_owned()
    };
    let system = content_of(&["system", "developer"]);
    let user = content_of(&["user"]);
    match engine.complete(&system, &user) {
        Ok(content) => (
            200,
            json!({
                "id": "chatcmpl-mock",
                "object": "chat.completion",
                "model": body.get("model").cloned().unwrap_or(Value::Null),
                "choices": [{
                    "index": 0,
                    "message": {"role": "assistant", "content": content},
                    "finish_reason": "stop"
                }]
            }),
        ),
        Err(BackendError::UnknownTemplate) => error(400, "unrecognized prompt template"),
        Err(e) => error(500, e.to_string()),
    }
}

fn embeddings(body: &Value, engine: &MockBackend) -> (u16, Value) {
    let inputs: Vec<String> = match body.get("input") {
        Some(Value::String(s)) => vec![s.clone()],
        Some(Value::Array(items)) => match items.iter().map(|v| v.as_str().map(str::to_owned)).collect() {
            Some(v) => v,
            None => return error(400, "input must be strings"),
        },
        _ => return error(400, "missing input"),
    };
    match engine.embed(&inputs) {
        Ok(vectors) => {
            let data: Vec<Value> = vectors
                .into_iter()
                .enumerate()
                .map(|(index, embedding)| json!({"object": "embedding", "index": index, "embedding": embedding}))
                .collect();
            (
                200,
                json!({"object": "list", "data": data, "model": body.get("model").cloned().unwrap_or(Value::Null)}),
            )
        }
        Err(e) => error(500, e.to_string()),
    }
}
