use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryKind {
    Position,
    State,
    Goal,
}

impl QueryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            QueryKind::Position => "position",
            QueryKind::State => "state",
            QueryKind::Goal => "goal",
        }
    }
}

/// Destination named by a `goto` intent. Unresolved references keep the
/// user's wording so the clarification can echo it in logs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "resolution", rename_all = "snake_case")]
pub enum LabelRef {
    Resolved { label: String },
    Unresolved { text: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IntentKind {
    Goto { target: LabelRef },
    Query { about: QueryKind },
    FreeChoice,
    Smalltalk,
    Unknown,
}

/// Inferred communicative intent of one user utterance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Intent {
    #[serde(flatten)]
    pub kind: IntentKind,
    pub raw: String,
}

impl Intent {
    pub fn new(kind: IntentKind, raw: impl Into<String>) -> Self {
        Self {
            kind,
            raw: raw.into(),
        }
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self.kind, IntentKind::Unknown)
    }

    /// Compact symbol used as the argument of `intends_user`.
    pub fn symbol(&self) -> String {
        match &self.kind {
            IntentKind::Goto {
                target: LabelRef::Resolved { label },
            } => format!("goto:{label}"),
            IntentKind::Goto {
                target: LabelRef::Unresolved { .. },
            } => "goto:unresolved".to_string(),
            IntentKind::Query { about } => format!("query:{}", about.as_str()),
            IntentKind::FreeChoice => "free_choice".to_string(),
            IntentKind::Smalltalk => "smalltalk".to_string(),
            IntentKind::Unknown => "unknown".to_string(),
        }
    }
}

impl fmt::Display for Intent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.symbol())
    }
}
