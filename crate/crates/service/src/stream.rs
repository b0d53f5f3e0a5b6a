use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::response::Response;
use serde::Deserialize;
use serde_json::json;

use mindframe_core::log::LogRecord;
use mindframe_core::model::EventPayload;

use crate::{ApiError, AppState, Feed};

#[derive(Debug, Default, Deserialize)]
pub(crate) struct StreamQuery {
    /// First seq to deliver (reconnects pass the last seq seen + 1).
    #[serde(default)]
    from: u64,
}

pub(crate) async fn upgrade(
    ws: WebSocketUpgrade,
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<StreamQuery>,
) -> Result<Response, ApiError> {
    let session = app.session(&id)?;
    let buffer = app.config.stream_buffer.max(1);
    Ok(ws.on_upgrade(move |socket| async move {
        if let Err(e) = pump(socket, &session.feed, q.from as usize, buffer).await {
            tracing::debug!(session = %session.id, error = %e, "stream ended");
        }
    }))
}

/// Backlog beyond `buffer` records is thinned by dropping its oldest tick
/// frames; other records are always delivered.
pub(crate) fn thin(backlog: Vec<LogRecord>, buffer: usize) -> (Vec<LogRecord>, usize) {
    let mut excess = backlog.len().saturating_sub(buffer);
    let mut dropped = 0;
    let kept = backlog
        .into_iter()
        .filter(|r| {
            if excess > 0 && matches!(r.event.payload, EventPayload::Tick { .. }) {
                excess -= 1;
                dropped += 1;
                false
            } else {
                true
            }
        })
        .collect();
    (kept, dropped)
}

async fn send(socket: &mut WebSocket, v: serde_json::Value) -> Result<(), axum::Error> {
    socket.send(Message::Text(v.to_string().into())).await
}

async fn pump(
    mut socket: WebSocket,
    feed: &Feed,
    mut cursor: usize,
    buffer: usize,
) -> Result<(), axum::Error> {
    let mut version = feed.subscribe();
    loop {
        let (published, closed) = *version.borrow_and_update();
        if cursor < published {
            let (batch, dropped) = thin(feed.records_from(cursor), buffer);
            if dropped > 0 {
                send(&mut socket, json!({ "kind": "dropped", "ticks": dropped })).await?;
            }
            for r in batch {
                send(&mut socket, json!({ "kind": "record", "record": r })).await?;
            }
            cursor = published;
            continue;
        }
        if closed {
            let last = published.checked_sub(1);
            send(&mut socket, json!({ "kind": "end", "last_seq": last })).await?;
            let _ = socket.send(Message::Close(None)).await;
            return Ok(());
        }
        tokio::select! {
            changed = version.changed() => {
                if changed.is_err() {
                    return Ok(());
                }
            }
            incoming = socket.recv() => match incoming {
                None | Some(Err(_)) | Some(Ok(Message::Close(_))) => return Ok(()),
                Some(Ok(_)) => {} // clients only ever need to listen
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mindframe_core::log::SessionLog;
    use mindframe_core::runtime::{Runtime, SessionSettings};
    use mindframe_core::world::bundled_world;

    #[test]
    fn thinning_drops_only_oldest_ticks() {
        let mut rt = Runtime::start(
            bundled_world("small_house").unwrap(),
            SessionSettings::default(),
            SessionLog::in_memory(),
        )
        .unwrap();
        rt.post_message("Go to tv.").unwrap();
        for _ in 0..60 {
            rt.tick().unwrap();
        }
        let all = rt.records().to_vec();
        let non_ticks = all
            .iter()
            .filter(|r| !matches!(r.event.payload, EventPayload::Tick { .. }))
            .count();
        let (kept, dropped) = thin(all.clone(), 10);
        assert_eq!(kept.len(), all.len() - dropped);
        assert_eq!(
            kept.iter()
                .filter(|r| !matches!(r.event.payload, EventPayload::Tick { .. }))
                .count(),
            non_ticks
        );
        assert!(kept.windows(2).all(|w| w[0].seq < w[1].seq));
        // the newest ticks survive
        assert_eq!(kept.last().unwrap().seq, all.last().unwrap().seq);
        let (kept, dropped) = thin(all.clone(), 10_000);
        assert_eq!((kept.len(), dropped), (all.len(), 0));
    }
}
