use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use mindframe_core::frames::Frame;
use mindframe_core::log::SessionLog;
use mindframe_core::policy::Engine;
use mindframe_core::runtime::{Runtime, SessionSettings};
use mindframe_core::sim::DEFAULT_DT;
use mindframe_core::world::bundled_world;

use crate::session::{spawn_session, ActorConfig, Command};
use crate::{stream, Advance, ApiError, AppState};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub world: String,
    #[serde(default)]
    pub engine: Option<Engine>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub frame: Option<String>,
    #[serde(default)]
    pub phrasing: Option<bool>,
    #[serde(default)]
    pub odometry_noise: Option<bool>,
    /// Overrides the service default; 0 means the clock only moves on `/advance`.
    #[serde(default)]
    pub time_scale: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MessageBody {
    text: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameBody {
    frame: String,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AdvanceBody {
    ticks: Option<u64>,
    seconds: Option<f64>,
    #[serde(default)]
    until_idle: bool,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create).get(list))
        .route("/sessions/{id}", get(session_state).delete(close))
        .route("/sessions/{id}/state", get(session_state))
        .route("/sessions/{id}/message", post(message))
        .route("/sessions/{id}/frame", post(frame))
        .route("/sessions/{id}/advance", post(advance))
        .route("/sessions/{id}/log", get(log))
        .route("/sessions/{id}/stream", get(stream::upgrade))
        .with_state(state)
}

type JsonBody<T> = Result<Json<T>, axum::extract::rejection::JsonRejection>;

fn body<T>(b: JsonBody<T>) -> Result<T, ApiError> {
    b.map(|Json(v)| v)
        .map_err(|e| ApiError::bad_request(e.body_text()))
}

async fn create(
    State(app): State<AppState>,
    b: JsonBody<CreateSession>,
) -> Result<impl IntoResponse, ApiError> {
    let req = body(b)?;
    let world = bundled_world(&req.world).map_err(|_| {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "unknown_world",
            format!("no world `{}`", req.world),
        )
    })?;
    let frame = match &req.frame {
        Some(f) => f.parse::<Frame>().map_err(|e| {
            ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "invalid_frame",
                e.to_string(),
            )
        })?,
        None => Frame::default(),
    };
    let settings = SessionSettings {
        engine: req.engine.unwrap_or_default(),
        seed: req.seed.unwrap_or(0),
        frame,
        phrasing: req.phrasing.unwrap_or(false),
        odometry_noise: req.odometry_noise.unwrap_or(false),
        ..Default::default()
    };
    let time_scale = req.time_scale.unwrap_or(app.config.time_scale);
    if !(time_scale.is_finite() && time_scale >= 0.0) {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "invalid_settings",
            "time_scale must be >= 0",
        ));
    }
    let rt = Runtime::start(world, settings, SessionLog::in_memory())?;
    let greeting = rt.records()[0].utterance.clone();
    let id = uuid::Uuid::new_v4().simple().to_string();
    let handle = spawn_session(
        id.clone(),
        rt,
        ActorConfig {
            time_scale,
            idle_timeout: app.config.idle_timeout,
            llm: app.config.llm.clone(),
        },
    );
    let state = handle.feed.state();
    app.sessions
        .lock()
        .expect("session table")
        .insert(id.clone(), Arc::new(handle));
    let mut out = state;
    out["greeting"] = json!(greeting);
    out["time_scale"] = json!(time_scale);
    Ok((StatusCode::CREATED, Json(out)))
}

async fn list(State(app): State<AppState>) -> Json<Value> {
    Json(json!({ "sessions": app.session_ids() }))
}

async fn session_state(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<Value>, ApiError> {
    Ok(Json(app.session(&id)?.feed.state()))
}

async fn close(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<Value>, ApiError> {
    let s = app.session(&id)?;
    s.close().await;
    Ok(Json(s.feed.state()))
}

async fn message(
    State(app): State<AppState>,
    Path(id): Path<String>,
    b: JsonBody<MessageBody>,
) -> Result<Json<Value>, ApiError> {
    let text = body(b)?.text;
    let s = app.session(&id)?;
    let reply = s.request(|tx| Command::Message(text, tx)).await?;
    Ok(Json(json!(reply)))
}

async fn frame(
    State(app): State<AppState>,
    Path(id): Path<String>,
    b: JsonBody<FrameBody>,
) -> Result<Json<Value>, ApiError> {
    let name = body(b)?.frame;
    let s = app.session(&id)?;
    let seq = s.request(|tx| Command::Frame(name, tx)).await?;
    let frame = s.feed.state()["frame"].clone();
    Ok(Json(json!({ "seq": seq, "frame": frame })))
}

async fn advance(
    State(app): State<AppState>,
    Path(id): Path<String>,
    b: JsonBody<AdvanceBody>,
) -> Result<Json<Value>, ApiError> {
    let req = body(b)?;
    let s = app.session(&id)?;
    let how = match (req.ticks, req.seconds, req.until_idle) {
        (Some(n), None, false) => Advance::Ticks(n),
        (None, Some(sec), false) if sec.is_finite() && sec >= 0.0 => {
            let dt = s.feed.state()["dt"].as_f64().unwrap_or(DEFAULT_DT);
            Advance::Ticks((sec / dt).round() as u64)
        }
        (None, None, true) => Advance::UntilIdle,
        _ => {
            return Err(ApiError::bad_request(
                "give exactly one of ticks, seconds, until_idle",
            ))
        }
    };
    let ticks = s.request(|tx| Command::Advance(how, tx)).await?;
    let state = s.feed.state();
    Ok(Json(
        json!({ "ticks": ticks, "clock": state["clock"], "navigating": state["navigating"] }),
    ))
}

async fn log(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<impl IntoResponse, ApiError> {
    let s = app.session(&id)?;
    Ok((
        [(header::CONTENT_TYPE, "application/x-ndjson")],
        s.feed.jsonl(),
    ))
}
