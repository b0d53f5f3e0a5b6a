use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::frames::{Frame, Utterance};
use crate::model::{BeliefBase, Desire, Event, EventPayload, Intention, State};

/// Upper bound on the serialized context, in bytes.
pub const CONTEXT_LIMIT: usize = 4096;
/// Number of most recent events included in the context.
pub const RECENT_EVENTS: usize = 6;

const INTERPRET: &str = include_str!("../../assets/prompts/interpret.txt");
const REPORT: &str = include_str!("../../assets/prompts/report.txt");
const FRAME_AGENTIVE: &str = include_str!("../../assets/prompts/frame_agentive.txt");
const FRAME_TELEOLOGICAL: &str = include_str!("../../assets/prompts/frame_teleological.txt");
const FRAME_MECHANISTIC: &str = include_str!("../../assets/prompts/frame_mechanistic.txt");

/// The two roles of the language layer: reading commands and phrasing reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptProfile {
    Interpret,
    Report,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub profile: PromptProfile,
    pub system: String,
    pub context: String,
    pub user: String,
    /// Frame the report is phrased in; interpretation is frame-blind.
    pub frame: Option<Frame>,
}

impl PromptBundle {
    /// Hex sha256 of the system prompt, for citing the exact prompt version.
    pub fn prompt_hash(&self) -> String {
        hex::encode(Sha256::digest(self.system.as_bytes()))
    }
}

fn frame_instruction(frame: Frame) -> &'static str {
    match frame {
        Frame::Agentive => FRAME_AGENTIVE,
        Frame::Teleological => FRAME_TELEOLOGICAL,
        Frame::Mechanistic => FRAME_MECHANISTIC,
    }
}

/// Compact, size-bounded view of an event for the context window.
fn event_summary(e: &Event) -> Value {
    let detail = match &e.payload {
        EventPayload::SessionStart { world, .. } => json!({ "world": world.name }),
        EventPayload::Tick { pose, progress, .. } => json!({ "pose": pose, "progress": progress }),
        other => serde_json::to_value(other)
            .ok()
            .and_then(|v| v.get("payload").cloned())
            .unwrap_or(Value::Null),
    };
    json!({ "t": e.t, "kind": e.kind().as_str(), "payload": detail })
}

/// Serializes the snapshot, dropping the oldest events (then trailing
/// beliefs) until it fits in [`CONTEXT_LIMIT`].
fn bounded_context(
    base: &BeliefBase,
    desires: &[Desire],
    intention: Option<&Intention>,
    recent: &[Event],
    extra: Value,
) -> String {
    let mut events: Vec<Value> = recent
        .iter()
        .rev()
        .take(RECENT_EVENTS)
        .rev()
        .map(event_summary)
        .collect();
    let mut beliefs: Vec<Value> = base
        .iter()
        .filter_map(|b| serde_json::to_value(b).ok())
        .collect();
    loop {
        let doc = json!({
            "beliefs": beliefs,
            "desires": desires,
            "intention": intention,
            "recent_events": events,
            "facts": extra,
        });
        let text = serde_json::to_string(&doc).expect("json values serialize");
        if text.len() <= CONTEXT_LIMIT {
            return text;
        }
        if !events.is_empty() {
            events.remove(0);
        } else if !beliefs.is_empty() {
            beliefs.pop();
        } else {
            let mut cut = CONTEXT_LIMIT;
            while !text.is_char_boundary(cut) {
                cut -= 1;
            }
            return text[..cut].to_string();
        }
    }
}

/// Prompt for choosing the next action from a user message.
pub fn interpret_prompt(
    state: &State,
    base: &BeliefBase,
    desires: &[Desire],
    intention: Option<&Intention>,
    recent: &[Event],
    utterance: &str,
) -> PromptBundle {
    let facts = json!({
        "known_locations": base.location_labels(),
        "status": state.robot.status.as_str(),
    });
    PromptBundle {
        profile: PromptProfile::Interpret,
        system: INTERPRET.to_string(),
        context: bounded_context(base, desires, intention, recent, facts),
        user: utterance.to_string(),
        frame: None,
    }
}

/// Prompt for rephrasing a template-rendered draft in `frame`.
pub fn report_prompt(draft: &Utterance, state: &State, base: &BeliefBase) -> PromptBundle {
    let facts = json!({
        "topic": draft.topic,
        "status": state.robot.status.as_str(),
        "pose": state.nav.pose,
        "goal": state.nav.goal,
    });
    PromptBundle {
        profile: PromptProfile::Report,
        system: format!("{REPORT}{}", frame_instruction(draft.frame)),
        context: bounded_context(base, &[], None, &[], facts),
        user: draft.text.clone(),
        frame: Some(draft.frame),
    }
}
