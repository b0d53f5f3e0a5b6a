use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;

use mindframe_core::runtime::RuntimeError;

/// Error body: `{"error": {"code": "...", "message": "..."}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn unknown_session(id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "unknown_session",
            format!("no session `{id}`"),
        )
    }

    pub fn closed() -> Self {
        Self::new(StatusCode::CONFLICT, "session_closed", "session is closed")
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }
}

impl From<RuntimeError> for ApiError {
    fn from(e: RuntimeError) -> Self {
        let (status, code) = match &e {
            RuntimeError::Closed => (StatusCode::CONFLICT, "session_closed"),
            RuntimeError::EmptyMessage => (StatusCode::UNPROCESSABLE_ENTITY, "empty_message"),
            RuntimeError::Busy => (StatusCode::CONFLICT, "turn_in_progress"),
            RuntimeError::Frame(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_frame"),
            RuntimeError::Settings(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_settings"),
            RuntimeError::World(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_world"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        Self::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "code": self.code, "message": self.message } });
        (self.status, Json(body)).into_response()
    }
}
