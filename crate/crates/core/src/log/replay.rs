use serde_json::Value;

use super::{encode_record, BehaviorTrace, LogError, LogRecord, SessionLog};
use crate::model::{initial_beliefs, BeliefBase, ErrorOrigin, EventPayload, State};
use crate::runtime::{Runtime, RuntimeError, SessionSettings};
use crate::world::WorldSpec;

/// Final state reconstructed by [`replay`].
#[derive(Debug, Clone, PartialEq)]
pub struct Replayed {
    pub state: State,
    pub beliefs: BeliefBase,
    pub trace: BehaviorTrace,
    pub records: Vec<LogRecord>,
}

/// Dotted path of the first leaf where two JSON values differ.
fn first_difference(a: &Value, b: &Value, path: String) -> Option<String> {
    match (a, b) {
        (Value::Object(x), Value::Object(y)) => {
            for (k, va) in x {
                let sub = if path.is_empty() {
                    k.clone()
                } else {
                    format!("{path}.{k}")
                };
                match y.get(k) {
                    Some(vb) => {
                        if let Some(p) = first_difference(va, vb, sub) {
                            return Some(p);
                        }
                    }
                    None => return Some(sub),
                }
            }
            y.keys().find(|k| !x.contains_key(*k)).map(|k| {
                if path.is_empty() {
                    k.clone()
                } else {
                    format!("{path}.{k}")
                }
            })
        }
        (Value::Array(x), Value::Array(y)) => {
            for (i, (va, vb)) in x.iter().zip(y).enumerate() {
                if let Some(p) = first_difference(va, vb, format!("{path}[{i}]")) {
                    return Some(p);
                }
            }
            (x.len() != y.len()).then(|| format!("{path}.len"))
        }
        _ => (a != b).then_some(path),
    }
}

fn diverged(seq: u64, field: impl Into<String>, detail: impl Into<String>) -> LogError {
    LogError::Divergence {
        seq,
        field: field.into(),
        detail: detail.into(),
    }
}

fn compare(regenerated: &LogRecord, recorded: &LogRecord) -> Result<(), LogError> {
    if encode_record(regenerated) == encode_record(recorded) {
        return Ok(());
    }
    let a = serde_json::to_value(recorded).expect("records serialize");
    let b = serde_json::to_value(regenerated).expect("records serialize");
    let field = first_difference(&a, &b, String::new()).unwrap_or_else(|| "encoding".into());
    Err(diverged(
        recorded.seq,
        field,
        "regenerated snapshot differs from the recorded one",
    ))
}

fn runtime_failure(seq: u64, e: RuntimeError) -> LogError {
    diverged(seq, "event", e.to_string())
}

/// State before any event: what an empty log replays to.
pub fn replay_from(world: &WorldSpec, records: &[LogRecord]) -> Result<Replayed, LogError> {
    if records.is_empty() {
        let state = State::from_world(world);
        let beliefs = initial_beliefs(&state).map_err(|e| diverged(0, "beliefs", e.to_string()))?;
        return Ok(Replayed {
            state,
            beliefs,
            trace: BehaviorTrace::from_records(&[]),
            records: Vec::new(),
        });
    }
    replay(records)
}

/// Re-executes the external inputs of a log (utterances, frame switches,
/// ticks, model completions and gateway failures) through a fresh runtime
/// and checks every regenerated record against the recorded one.
pub fn replay(records: &[LogRecord]) -> Result<Replayed, LogError> {
    let first = records.first().ok_or(LogError::MissingSessionStart)?;
    let (world, settings): (WorldSpec, SessionSettings) = match &first.event.payload {
        EventPayload::SessionStart { world, settings } => (world.clone(), settings.clone()),
        _ => return Err(LogError::MissingSessionStart),
    };
    let dt = settings.dt;
    let mut rt = Runtime::start(world, settings, SessionLog::in_memory())
        .map_err(|e| runtime_failure(0, e))?;
    let mut checked = 0usize;

    let check = |rt: &Runtime, checked: &mut usize| -> Result<(), LogError> {
        let regenerated = rt.records();
        while *checked < regenerated.len() {
            // a log cut mid-turn (e.g. by a crash) ends before the turn's
            // derived records do; everything it holds has been checked
            let Some(recorded) = records.get(*checked) else {
                break;
            };
            compare(&regenerated[*checked], recorded)?;
            *checked += 1;
        }
        Ok(())
    };
    check(&rt, &mut checked)?;

    for r in &records[1..] {
        let idx = r.seq as usize;
        if idx < checked {
            continue; // derived record, already regenerated and compared
        }
        if idx > checked {
            return Err(diverged(
                checked as u64,
                "record",
                "recorded record was not regenerated",
            ));
        }
        let tick = (r.event.t / dt).round();
        if !(tick.is_finite() && tick >= 0.0) {
            return Err(diverged(
                r.seq,
                "event.t",
                "timestamp off the simulation clock",
            ));
        }
        let tick = tick as u64;
        let sync = |rt: &mut Runtime, target: u64| {
            rt.set_tick_count(target)
                .map_err(|e| runtime_failure(r.seq, e))
        };
        let fed = match &r.event.payload {
            EventPayload::Tick { .. } => {
                sync(&mut rt, tick.saturating_sub(1))?;
                rt.tick().map(drop)
            }
            EventPayload::UserUtterance { text } => {
                sync(&mut rt, tick)?;
                rt.post_message(text).map(drop)
            }
            EventPayload::FrameSwitch { frame } => {
                sync(&mut rt, tick)?;
                rt.switch_frame(frame).map(drop)
            }
            EventPayload::LlmResponse { .. }
            | EventPayload::Error {
                origin: ErrorOrigin::Gateway,
                ..
            } => {
                sync(&mut rt, tick)?;
                rt.resume_event(r.event.clone()).map(drop)
            }
            _ => {
                return Err(diverged(
                    r.seq,
                    "event",
                    format!(
                        "derived event `{}` was not regenerated",
                        r.event.kind().as_str()
                    ),
                ))
            }
        };
        fed.map_err(|e| runtime_failure(r.seq, e))?;
        check(&rt, &mut checked)?;
    }
    if checked < records.len() {
        return Err(diverged(
            checked as u64,
            "record",
            "recorded record was not regenerated",
        ));
    }
    let regenerated = rt.records().to_vec();
    Ok(Replayed {
        state: rt.state().clone(),
        beliefs: rt.beliefs().clone(),
        trace: BehaviorTrace::from_records(&regenerated),
        records: regenerated,
    })
}
