use serde::{Deserialize, Serialize};

use super::{Intent, Proposition, Twist};
use crate::geometry::Pose;
use crate::llm::PromptProfile;
use crate::runtime::SessionSettings;
use crate::world::WorldSpec;

/// Event type tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    SessionStart,
    UserUtterance,
    CommandParsed,
    NavGoalSet,
    NavProgress,
    NavGoalReached,
    FrameSwitch,
    LlmResponse,
    Tick,
    Error,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::SessionStart => "session_start",
            EventKind::UserUtterance => "user_utterance",
            EventKind::CommandParsed => "command_parsed",
            EventKind::NavGoalSet => "nav_goal_set",
            EventKind::NavProgress => "nav_progress",
            EventKind::NavGoalReached => "nav_goal_reached",
            EventKind::FrameSwitch => "frame_switch",
            EventKind::LlmResponse => "llm_response",
            EventKind::Tick => "tick",
            EventKind::Error => "error",
        }
    }
}

/// Subsystem an error event comes from. Gateway errors are inputs to the
/// session (the outcome of a remote call); the others are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorOrigin {
    Gateway,
    Validation,
    Planner,
    Lexicon,
}

/// Event data, one variant per event type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventPayload {
    SessionStart {
        world: WorldSpec,
        settings: SessionSettings,
    },
    UserUtterance {
        text: String,
    },
    CommandParsed {
        intent: Intent,
        goal: Option<Proposition>,
    },
    NavGoalSet {
        label: String,
        target: Pose,
    },
    NavProgress {
        progress: f64,
        pose: Pose,
    },
    NavGoalReached {
        label: String,
        pose: Pose,
    },
    FrameSwitch {
        frame: String,
    },
    LlmResponse {
        profile: PromptProfile,
        text: String,
        truncated: bool,
    },
    Tick {
        dt: f64,
        /// Ground-truth pose after integration.
        pose: Pose,
        /// What the robot reads from odometry (equal to `pose` without noise).
        odometry: Pose,
        command: Twist,
        progress: Option<f64>,
    },
    Error {
        origin: ErrorOrigin,
        code: String,
        detail: String,
    },
}

/// A timestamped event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    #[serde(flatten)]
    pub payload: EventPayload,
}

impl Event {
    pub fn new(t: f64, payload: EventPayload) -> Self {
        Self { t, payload }
    }

    pub fn kind(&self) -> EventKind {
        match &self.payload {
            EventPayload::SessionStart { .. } => EventKind::SessionStart,
            EventPayload::UserUtterance { .. } => EventKind::UserUtterance,
            EventPayload::CommandParsed { .. } => EventKind::CommandParsed,
            EventPayload::NavGoalSet { .. } => EventKind::NavGoalSet,
            EventPayload::NavProgress { .. } => EventKind::NavProgress,
            EventPayload::NavGoalReached { .. } => EventKind::NavGoalReached,
            EventPayload::FrameSwitch { .. } => EventKind::FrameSwitch,
            EventPayload::LlmResponse { .. } => EventKind::LlmResponse,
            EventPayload::Tick { .. } => EventKind::Tick,
            EventPayload::Error { .. } => EventKind::Error,
        }
    }

    /// Events that enter a session from outside (user, clock, frame control,
    /// remote model). Replay feeds these back; everything else is re-derived.
    pub fn is_external(&self) -> bool {
        match &self.payload {
            EventPayload::SessionStart { .. }
            | EventPayload::UserUtterance { .. }
            | EventPayload::FrameSwitch { .. }
            | EventPayload::Tick { .. }
            | EventPayload::LlmResponse { .. } => true,
            EventPayload::Error { origin, .. } => *origin == ErrorOrigin::Gateway,
            _ => false,
        }
    }
}
