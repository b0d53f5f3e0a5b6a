//! Append-only session log, replay, behavior traces and stimulus bundles.

mod record;
mod replay;
mod stimulus;
mod trace;

use thiserror::Error;

pub use record::{
    canonical_json, decode_record, encode_record, parse_log, read_log, to_jsonl, FsyncPolicy,
    LogRecord, SessionLog,
};
pub use replay::{replay, replay_from, Replayed};
pub use stimulus::{
    export_stimuli, write_bundle, Speaker, StimulusItem, TranscriptLine, Viewpoints,
    BUNDLE_FORMAT_VERSION,
};
pub use trace::{BehaviorTrace, PoseSample, TraceEntry};

#[derive(Debug, Error)]
pub enum LogError {
    #[error("corrupt record at seq {seq}: {reason}")]
    Corrupt { seq: u64, reason: String },
    #[error("expected seq {expected}, got {got}")]
    Ordering { expected: u64, got: u64 },
    #[error("session log is closed")]
    Closed,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("log does not start with session_start")]
    MissingSessionStart,
    #[error("replay diverged at seq {seq} in `{field}`: {detail}")]
    Divergence {
        seq: u64,
        field: String,
        detail: String,
    },
    #[error("stimulus export needs exactly one run per frame: {0}")]
    IncompleteFrameSet(String),
    #[error("runs disagree on {what}: {detail}")]
    InvarianceViolation { what: String, detail: String },
}
