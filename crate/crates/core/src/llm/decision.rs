use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::model::ActionKind;
use crate::world::{resolve_label, WorldSpec};

/// Structured decision returned by the interpreting model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmDecision {
    pub action: ActionKind,
    pub target_label: Option<String>,
    pub utterance: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionFailure {
    MalformedBlock,
    UnknownAction,
    MissingTarget,
    UnresolvableLabel,
}

impl DecisionFailure {
    pub fn code(self) -> &'static str {
        match self {
            DecisionFailure::MalformedBlock => "malformed_block",
            DecisionFailure::UnknownAction => "unknown_action",
            DecisionFailure::MissingTarget => "missing_target",
            DecisionFailure::UnresolvableLabel => "unresolvable_label",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}: {detail}", .reason.code())]
pub struct DecisionError {
    pub reason: DecisionFailure,
    pub detail: String,
}

impl DecisionError {
    fn new(reason: DecisionFailure, detail: impl Into<String>) -> Self {
        Self {
            reason,
            detail: detail.into(),
        }
    }
}

/// Text of the first ```json fence, else the first balanced `{...}`.
fn extract_block(raw: &str) -> Option<&str> {
    if let Some(start) = raw.find("```json") {
        let body = &raw[start + 7..];
        if let Some(end) = body.find("```") {
            return Some(body[..end].trim());
        }
    }
    let open = raw.find('{')?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in raw[open..].char_indices() {
        if in_string {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&raw[open..open + i + 1]);
                }
            }
            _ => {}
        }
    }
    None
}

/// Extracts and validates the structured block of a model reply.
pub fn parse_decision(raw: &str, world: &WorldSpec) -> Result<LlmDecision, DecisionError> {
    use DecisionFailure::*;
    let block = extract_block(raw)
        .ok_or_else(|| DecisionError::new(MalformedBlock, "no JSON block in reply"))?;
    let v: Value = serde_json::from_str(block)
        .map_err(|e| DecisionError::new(MalformedBlock, e.to_string()))?;
    let obj = v
        .as_object()
        .ok_or_else(|| DecisionError::new(MalformedBlock, "block is not an object"))?;
    let action = match obj.get("action").and_then(Value::as_str).map(str::trim) {
        Some(a) if a.eq_ignore_ascii_case("move") => ActionKind::Move,
        Some(a) if a.eq_ignore_ascii_case("chat") => ActionKind::Chat,
        Some(a) => return Err(DecisionError::new(UnknownAction, format!("`{a}`"))),
        None => return Err(DecisionError::new(UnknownAction, "missing `action`")),
    };
    let utterance = match obj.get("utterance") {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => {
            return Err(DecisionError::new(
                MalformedBlock,
                "`utterance` must be a string",
            ))
        }
    };
    let target = obj
        .get("target")
        .or_else(|| obj.get("target_label"))
        .and_then(Value::as_str)
        .map(str::trim)
        .filter(|s| !s.is_empty());
    let target_label = match (action, target) {
        (ActionKind::Move, None) => {
            return Err(DecisionError::new(MissingTarget, "move without target"))
        }
        (_, Some(t)) => Some(
            resolve_label(world, t)
                .ok_or_else(|| DecisionError::new(UnresolvableLabel, format!("`{t}`")))?,
        ),
        (ActionKind::Chat, None) => None,
    };
    Ok(LlmDecision {
        action,
        target_label,
        utterance,
    })
}
