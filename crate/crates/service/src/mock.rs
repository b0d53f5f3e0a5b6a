//! Deterministic stand-in for a local chat-completion server, with fault
//! modes for exercising gateway fallbacks.

use std::future::Future;
use std::net::SocketAddr;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::{json, Value};
use tokio::net::TcpListener;
use tokio::sync::oneshot;

use mindframe_core::model::{IntentKind, LabelRef};
use mindframe_core::policy::parse_command;
use mindframe_core::world::{bundled_world, bundled_world_names};

#[derive(Debug, Clone, PartialEq)]
pub enum MockMode {
    /// Structured decisions derived from the user message; rephrasings
    /// return the draft unchanged.
    Echo,
    /// The given replies in rotation.
    Canned(Vec<String>),
    /// A 200 response whose body is not JSON.
    Garbage,
    /// Echo, after sleeping this long.
    Delay(Duration),
    /// Accept connections and close them without answering.
    Drop,
    /// Always answer with this HTTP status.
    Status(u16),
}

impl FromStr for MockMode {
    type Err = String;

    /// `echo`, `garbage`, `drop`, `delay:<ms>`, `status:<code>`.
    /// Canned replies come from a file; see the CLI.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (head, arg) = s.split_once(':').unwrap_or((s, ""));
        match (head, arg) {
            ("echo", "") => Ok(MockMode::Echo),
            ("garbage", "") => Ok(MockMode::Garbage),
            ("drop", "") => Ok(MockMode::Drop),
            ("delay", ms) => ms
                .parse::<u64>()
                .map(|ms| MockMode::Delay(Duration::from_millis(ms)))
                .map_err(|_| format!("bad delay `{ms}`")),
            ("status", code) => match code.parse::<u16>() {
                Ok(c) if (100..600).contains(&c) => Ok(MockMode::Status(c)),
                _ => Err(format!("bad status `{code}`")),
            },
            _ => Err(format!("unknown mock mode `{s}`")),
        }
    }
}

struct Mock {
    mode: MockMode,
    served: AtomicUsize,
}

/// Splits the gateway's user message back into context and utterance.
fn split_user(content: &str) -> (Value, String) {
    let body = content.strip_prefix("Context:\n").unwrap_or(content);
    match body.split_once("\n\nMessage:\n") {
        Some((ctx, msg)) => (
            serde_json::from_str(ctx).unwrap_or(Value::Null),
            msg.to_string(),
        ),
        None => (Value::Null, body.to_string()),
    }
}

/// What the echo mode answers to a chat-completion request.
pub fn echo_reply(request: &Value) -> String {
    let user = request
        .pointer("/messages/1/content")
        .and_then(Value::as_str)
        .unwrap_or_default();
    let (ctx, text) = split_user(user);
    let Some(known) = ctx
        .pointer("/facts/known_locations")
        .and_then(Value::as_array)
    else {
        // rephrasing request: hand the draft back
        return text;
    };
    let known: Vec<&str> = known.iter().filter_map(Value::as_str).collect();
    for name in bundled_world_names() {
        let Ok(world) = bundled_world(name) else {
            continue;
        };
        match parse_command(&text, &world).kind {
            IntentKind::Goto {
                target: LabelRef::Resolved { label },
            } if known.contains(&label.as_str()) => {
                return format!(
                    "```json\n{}\n```",
                    json!({ "action": "move", "target": label, "utterance": format!("Heading to {label}.") })
                );
            }
            IntentKind::FreeChoice if !known.is_empty() => {
                return format!(
                    "```json\n{}\n```",
                    json!({ "action": "move", "target": known[0], "utterance": "Picking a place." })
                );
            }
            _ => {}
        }
    }
    format!(
        "```json\n{}\n```",
        json!({ "action": "chat", "utterance": "Noted." })
    )
}

fn completion(model: &str, n: usize, content: String) -> Value {
    json!({
        "id": format!("mock-{n}"),
        "object": "chat.completion",
        "created": 0,
        "model": model,
        "choices": [{
            "index": 0,
            "message": { "role": "assistant", "content": content },
            "finish_reason": "stop",
        }],
        "usage": { "prompt_tokens": 0, "completion_tokens": 0, "total_tokens": 0 },
    })
}

async fn chat(State(mock): State<Arc<Mock>>, Json(req): Json<Value>) -> Response {
    let n = mock.served.fetch_add(1, Ordering::SeqCst);
    let model = req
        .get("model")
        .and_then(Value::as_str)
        .unwrap_or("mock")
        .to_string();
    let content = match &mock.mode {
        MockMode::Echo => echo_reply(&req),
        MockMode::Canned(replies) if replies.is_empty() => String::new(),
        MockMode::Canned(replies) => replies[n % replies.len()].clone(),
        MockMode::Garbage => {
            return (
                [(header::CONTENT_TYPE, "application/json")],
                "\u{1}{{ not json <<<",
            )
                .into_response();
        }
        MockMode::Delay(d) => {
            tokio::time::sleep(*d).await;
            echo_reply(&req)
        }
        MockMode::Status(code) => {
            let status = StatusCode::from_u16(*code).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
            return (
                status,
                Json(json!({ "error": { "message": "mock status" } })),
            )
                .into_response();
        }
        MockMode::Drop => unreachable!("drop mode never routes requests"),
    };
    Json(completion(&model, n, content)).into_response()
}

pub fn mock_router(mode: MockMode) -> Router {
    let state = Arc::new(Mock {
        mode,
        served: AtomicUsize::new(0),
    });
    Router::new()
        .route("/v1/chat/completions", post(chat))
        .route("/health", get(|| async { "ok" }))
        .with_state(state)
}

/// Serves `mode` on `listener` until `shutdown` resolves.
pub async fn serve_mock(
    listener: TcpListener,
    mode: MockMode,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    if mode == MockMode::Drop {
        tokio::pin!(shutdown);
        loop {
            tokio::select! {
                _ = &mut shutdown => return Ok(()),
                accepted = listener.accept() => drop(accepted?),
            }
        }
    }
    axum::serve(listener, mock_router(mode))
        .with_graceful_shutdown(shutdown)
        .await
}

/// A mock server on its own thread and runtime; stops when dropped.
pub struct MockServer {
    addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl MockServer {
    pub fn start(mode: MockMode) -> std::io::Result<Self> {
        let std_listener = std::net::TcpListener::bind("127.0.0.1:0")?;
        std_listener.set_nonblocking(true)?;
        let addr = std_listener.local_addr()?;
        let (stop, stopped) = oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_current_thread()
                .enable_all()
                .build()
                .expect("mock runtime");
            rt.block_on(async move {
                let listener = TcpListener::from_std(std_listener).expect("mock listener");
                let _ = serve_mock(listener, mode, async {
                    let _ = stopped.await;
                })
                .await;
            });
        });
        Ok(Self {
            addr,
            stop: Some(stop),
            thread: Some(thread),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Base URL suitable for a gateway endpoint.
    pub fn endpoint(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        if let Some(s) = self.stop.take() {
            let _ = s.send(());
        }
        // delayed handlers may still be sleeping; don't wait on them
        if let Some(t) = self.thread.take() {
            if t.is_finished() {
                let _ = t.join();
            }
        }
    }
}
