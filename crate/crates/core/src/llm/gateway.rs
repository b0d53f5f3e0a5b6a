use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::PromptBundle;

pub const DEFAULT_ENDPOINT: &str = "http://127.0.0.1:8089";
pub const DEFAULT_MODEL: &str = "local";
pub const DEFAULT_TIMEOUT_SECS: f64 = 10.0;
pub const DEFAULT_MAX_TOKENS: u32 = 256;
/// Replies longer than this many bytes are truncated and flagged.
pub const REPLY_CAP: usize = 16 * 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatewayConfig {
    pub endpoint: String,
    pub model: String,
    pub timeout_secs: f64,
    pub temperature: f64,
    pub max_tokens: u32,
    pub reply_cap: usize,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            endpoint: DEFAULT_ENDPOINT.to_string(),
            model: DEFAULT_MODEL.to_string(),
            timeout_secs: DEFAULT_TIMEOUT_SECS,
            temperature: 0.0,
            max_tokens: DEFAULT_MAX_TOKENS,
            reply_cap: REPLY_CAP,
        }
    }
}

impl GatewayConfig {
    /// Applies `MINDFRAME_LLM_ENDPOINT`, `_MODEL`, `_TIMEOUT`, `_TEMPERATURE`
    /// and `_MAX_TOKENS`; unparsable values are ignored.
    pub fn with_env(mut self) -> Self {
        self.apply_env(|k| std::env::var(k).ok());
        self
    }

    fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) {
        if let Some(v) = get("MINDFRAME_LLM_ENDPOINT") {
            self.endpoint = v;
        }
        if let Some(v) = get("MINDFRAME_LLM_MODEL") {
            self.model = v;
        }
        if let Some(v) = get("MINDFRAME_LLM_TIMEOUT").and_then(|v| v.parse().ok()) {
            self.timeout_secs = v;
        }
        if let Some(v) = get("MINDFRAME_LLM_TEMPERATURE").and_then(|v| v.parse().ok()) {
            self.temperature = v;
        }
        if let Some(v) = get("MINDFRAME_LLM_MAX_TOKENS").and_then(|v| v.parse().ok()) {
            self.max_tokens = v;
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs.max(0.001))
    }
}

/// Model text plus whether it was cut at the reply cap.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub truncated: bool,
}

impl Completion {
    /// Applies the byte cap at a character boundary.
    pub fn capped(mut text: String, cap: usize) -> Self {
        if text.len() <= cap {
            return Self {
                text,
                truncated: false,
            };
        }
        let mut cut = cap;
        while !text.is_char_boundary(cut) {
            cut -= 1;
        }
        text.truncate(cut);
        Self {
            text,
            truncated: true,
        }
    }
}

/// Every failure mode is one signal to callers: the gateway is unavailable.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "cause", content = "detail", rename_all = "snake_case")]
pub enum GatewayError {
    #[error("gateway unavailable: timed out")]
    Timeout,
    #[error("gateway unavailable: connection failed ({0})")]
    Connection(String),
    #[error("gateway unavailable: HTTP status {0}")]
    Status(u16),
    #[error("gateway unavailable: unreadable response ({0})")]
    Protocol(String),
}

impl GatewayError {
    pub fn code(&self) -> &'static str {
        match self {
            GatewayError::Timeout => "timeout",
            GatewayError::Connection(_) => "connection_failed",
            GatewayError::Status(_) => "http_status",
            GatewayError::Protocol(_) => "protocol",
        }
    }
}

/// Anything that can answer a prompt. Implementations must not touch session state.
pub trait LanguageModel: Send + Sync {
    fn complete(&self, bundle: &PromptBundle) -> Result<Completion, GatewayError>;
}

/// OpenAI-style chat-completion request body for `bundle`.
pub fn request_body(bundle: &PromptBundle, config: &GatewayConfig) -> Value {
    json!({
        "model": config.model,
        "temperature": config.temperature,
        "max_tokens": config.max_tokens,
        "messages": [
            { "role": "system", "content": bundle.system },
            { "role": "user", "content": format!("Context:\n{}\n\nMessage:\n{}", bundle.context, bundle.user) },
        ],
    })
}

/// Client for `POST {endpoint}/v1/chat/completions`.
pub struct HttpGateway {
    config: GatewayConfig,
    client: reqwest::blocking::Client,
}

impl HttpGateway {
    pub fn new(config: GatewayConfig) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout())
            .connect_timeout(config.timeout())
            .build()
            .map_err(|e| GatewayError::Connection(e.to_string()))?;
        Ok(Self { config, client })
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    fn url(&self) -> String {
        format!(
            "{}/v1/chat/completions",
            self.config.endpoint.trim_end_matches('/')
        )
    }
}

fn classify(e: reqwest::Error) -> GatewayError {
    if e.is_timeout() {
        GatewayError::Timeout
    } else if e.is_connect() || e.is_request() {
        GatewayError::Connection(e.to_string())
    } else {
        GatewayError::Protocol(e.to_string())
    }
}

impl LanguageModel for HttpGateway {
    fn complete(&self, bundle: &PromptBundle) -> Result<Completion, GatewayError> {
        let resp = self
            .client
            .post(self.url())
            .json(&request_body(bundle, &self.config))
            .send()
            .map_err(classify)?;
        let status = resp.status();
        if !status.is_success() {
            return Err(GatewayError::Status(status.as_u16()));
        }
        let body: Value = resp.json().map_err(classify)?;
        let text = body
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| GatewayError::Protocol("missing choices[0].message.content".into()))?;
        Ok(Completion::capped(text.to_string(), self.config.reply_cap))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::PromptProfile;
    use std::collections::HashMap;
    use std::time::Instant;

    fn bundle() -> PromptBundle {
        PromptBundle {
            profile: PromptProfile::Interpret,
            system: "sys".into(),
            context: "{}".into(),
            user: "Go to cash.".into(),
            frame: None,
        }
    }

    #[test]
    fn reply_cap_truncates_with_flag() {
        let c = Completion::capped("é".repeat(600_000), REPLY_CAP);
        assert!(c.truncated);
        assert!(c.text.len() <= REPLY_CAP);
        let short = Completion::capped("ok".into(), REPLY_CAP);
        assert!(!short.truncated);
    }

    #[test]
    fn env_overrides() {
        let vars: HashMap<&str, &str> = [
            ("MINDFRAME_LLM_ENDPOINT", "http://x:1"),
            ("MINDFRAME_LLM_TIMEOUT", "2.5"),
            ("MINDFRAME_LLM_TEMPERATURE", "bogus"),
            ("MINDFRAME_LLM_MAX_TOKENS", "64"),
        ]
        .into();
        let mut c = GatewayConfig::default();
        c.apply_env(|k| vars.get(k).map(|v| v.to_string()));
        assert_eq!(c.endpoint, "http://x:1");
        assert_eq!(c.timeout_secs, 2.5);
        assert_eq!(c.temperature, 0.0);
        assert_eq!(c.max_tokens, 64);
    }

    #[test]
    fn request_shape() {
        let body = request_body(&bundle(), &GatewayConfig::default());
        assert_eq!(body["temperature"], json!(0.0));
        assert_eq!(body["messages"][0]["role"], "system");
        assert!(body["messages"][1]["content"]
            .as_str()
            .unwrap()
            .ends_with("Go to cash."));
    }

    #[test]
    fn refused_connection_is_unavailable_quickly() {
        // bind then drop to get a port nobody listens on
        let port = std::net::TcpListener::bind("127.0.0.1:0")
            .unwrap()
            .local_addr()
            .unwrap()
            .port();
        let gw = HttpGateway::new(GatewayConfig {
            endpoint: format!("http://127.0.0.1:{port}"),
            timeout_secs: 2.0,
            ..GatewayConfig::default()
        })
        .unwrap();
        let start = Instant::now();
        let err = gw.complete(&bundle()).unwrap_err();
        assert!(
            matches!(err, GatewayError::Connection(_) | GatewayError::Timeout),
            "{err:?}"
        );
        assert!(start.elapsed() < Duration::from_secs(3));
    }
}
