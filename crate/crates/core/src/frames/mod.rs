//! Explanation frames: selection, template rendering and lexicon checks.

mod lexicon;
mod template;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Event, EventPayload};

pub use lexicon::{check_lexicon, LexiconSpec, Violation};
pub use template::{
    reachable_keys, render, RenderContext, Template, TemplateLibrary, TemplatePack, When,
    PLACEHOLDERS,
};

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    #[default]
    Agentive,
    Teleological,
    Mechanistic,
}

impl Frame {
    pub const ALL: [Frame; 3] = [Frame::Agentive, Frame::Teleological, Frame::Mechanistic];

    pub fn as_str(self) -> &'static str {
        match self {
            Frame::Agentive => "agentive",
            Frame::Teleological => "teleological",
            Frame::Mechanistic => "mechanistic",
        }
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Frame {
    type Err = FrameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "agentive" | "mentalistic" => Ok(Frame::Agentive),
            "teleological" => Ok(Frame::Teleological),
            "mechanistic" => Ok(Frame::Mechanistic),
            _ => Err(FrameError::UnknownFrame(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Template,
    Llm,
}

/// A rendered message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub text: String,
    pub frame: Frame,
    pub topic: String,
    pub provenance: Provenance,
}

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("unknown frame `{0}` (expected agentive, teleological or mechanistic)")]
    UnknownFrame(String),
    #[error("no {frame} template for action `{action}` with tag `{tag}` ({when})")]
    MissingTemplate {
        frame: Frame,
        action: String,
        tag: String,
        when: &'static str,
    },
    #[error(
        "{frame} template `{tag}` needs `{{{placeholder}}}` but the state has no value for it"
    )]
    MissingValue {
        frame: Frame,
        tag: String,
        placeholder: String,
    },
    #[error("template pack: {0}")]
    Pack(String),
    #[error("template pack {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// frame_switch sets the frame, session_start resets to the configured
/// default, everything else keeps it.
pub fn select_frame(current: Frame, e: &Event) -> Result<Frame, FrameError> {
    match &e.payload {
        EventPayload::FrameSwitch { frame } => frame.parse(),
        EventPayload::SessionStart { settings, .. } => Ok(settings.frame),
        _ => Ok(current),
    }
}
