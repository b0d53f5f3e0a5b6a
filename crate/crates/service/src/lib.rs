//! HTTP/WebSocket front end for live sessions, plus a deterministic mock of
//! an OpenAI-style chat-completion server.

mod api;
mod error;
pub mod mock;
mod session;
mod stream;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use mindframe_core::llm::{
    Completion, GatewayConfig, GatewayError, HttpGateway, LanguageModel, PromptBundle,
};

pub use api::{router, CreateSession};
pub use error::ApiError;
pub use session::{Advance, Feed, MessageReply, SessionHandle};

pub const DEFAULT_IDLE_TIMEOUT: Duration = Duration::from_secs(15 * 60);
pub const DEFAULT_STREAM_BUFFER: usize = 256;

#[derive(Clone)]
pub struct ServiceConfig {
    /// Default simulated seconds per wall second (0 = manual clock).
    pub time_scale: f64,
    pub idle_timeout: Duration,
    /// Backlog above which a stream drops its oldest tick frames.
    pub stream_buffer: usize,
    pub llm: Option<Arc<dyn LanguageModel>>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            time_scale: 1.0,
            idle_timeout: DEFAULT_IDLE_TIMEOUT,
            stream_buffer: DEFAULT_STREAM_BUFFER,
            llm: None,
        }
    }
}

impl std::fmt::Debug for ServiceConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ServiceConfig")
            .field("time_scale", &self.time_scale)
            .field("idle_timeout", &self.idle_timeout)
            .field("stream_buffer", &self.stream_buffer)
            .field("llm", &self.llm.is_some())
            .finish()
    }
}

/// Builds a fresh blocking HTTP client per call, so no client outlives the
/// blocking thread it runs on.
#[derive(Debug, Clone)]
pub struct PerCallGateway(pub GatewayConfig);

impl LanguageModel for PerCallGateway {
    fn complete(&self, bundle: &PromptBundle) -> Result<Completion, GatewayError> {
        HttpGateway::new(self.0.clone())?.complete(bundle)
    }
}

#[derive(Clone)]
pub struct AppState {
    pub(crate) config: ServiceConfig,
    pub(crate) sessions: Arc<Mutex<HashMap<String, Arc<SessionHandle>>>>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        Self {
            config,
            sessions: Arc::default(),
        }
    }

    pub fn session(&self, id: &str) -> Result<Arc<SessionHandle>, ApiError> {
        self.sessions
            .lock()
            .expect("session table")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::unknown_session(id))
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .sessions
            .lock()
            .expect("session table")
            .keys()
            .cloned()
            .collect();
        ids.sort();
        ids
    }
}

/// Serves the API on `listener` until the future is dropped.
pub async fn serve(
    listener: tokio::net::TcpListener,
    config: ServiceConfig,
) -> std::io::Result<()> {
    axum::serve(listener, router(AppState::new(config))).await
}
