use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::LogError;
use crate::frames::{Frame, Utterance};
use crate::model::{ActionParams, BeliefBase, Desire, Event, Intention};

/// An event with the beliefs, desires, intention and action after it, plus
/// the frame in force and the rendered message.
/// Snapshots are post-transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub seq: u64,
    pub event: Event,
    pub beliefs: BeliefBase,
    pub desires: Vec<Desire>,
    pub intention: Option<Intention>,
    pub action: Option<ActionParams>,
    pub frame: Frame,
    pub utterance: Option<Utterance>,
}

const DIGEST_KEY: &str = ",\"digest\":\"";

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Compact JSON of the record without its digest.
pub fn canonical_json(r: &LogRecord) -> String {
    serde_json::to_string(r).expect("log records serialize")
}

/// One log line (no trailing newline): the canonical JSON with a
/// `"digest"` member holding the sha256 of that JSON appended last.
pub fn encode_record(r: &LogRecord) -> String {
    let body = canonical_json(r);
    let d = digest(body.as_bytes());
    format!("{}{DIGEST_KEY}{d}\"}}", &body[..body.len() - 1])
}

/// Inverse of [`encode_record`]; `index` is the zero-based line number and
/// therefore the expected seq.
pub fn decode_record(line: &str, index: usize) -> Result<LogRecord, LogError> {
    let corrupt = |reason: &str| LogError::Corrupt {
        seq: index as u64,
        reason: reason.to_string(),
    };
    let at = line
        .rfind(DIGEST_KEY)
        .ok_or_else(|| corrupt("missing digest"))?;
    let tail = &line[at + DIGEST_KEY.len()..];
    let recorded = tail
        .strip_suffix("\"}")
        .ok_or_else(|| corrupt("malformed digest"))?;
    let body = format!("{}}}", &line[..at]);
    if digest(body.as_bytes()) != recorded {
        return Err(corrupt("digest mismatch"));
    }
    let r: LogRecord =
        serde_json::from_str(&body).map_err(|e| corrupt(&format!("unparsable record: {e}")))?;
    if r.seq != index as u64 {
        return Err(LogError::Ordering {
            expected: index as u64,
            got: r.seq,
        });
    }
    Ok(r)
}

pub fn parse_log(text: &str) -> Result<Vec<LogRecord>, LogError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| decode_record(l, i))
        .collect()
}

pub fn read_log(path: impl AsRef<Path>) -> Result<Vec<LogRecord>, LogError> {
    let path = path.as_ref();
    let io = |source| LogError::Io {
        path: path.display().to_string(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        if !line.trim().is_empty() {
            out.push(decode_record(&line, i)?);
        }
    }
    Ok(out)
}

/// When appended records reach the disk.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FsyncPolicy {
    /// Buffered; written on close.
    Buffered,
    /// Handed to the OS after every record.
    #[default]
    Flush,
    /// fsync after every record.
    Sync,
}

struct Sink {
    path: PathBuf,
    out: BufWriter<File>,
    policy: FsyncPolicy,
}

/// Append-only, single-writer session log. Records are always kept in
/// memory; a file sink is optional.
pub struct SessionLog {
    records: Vec<LogRecord>,
    sink: Option<Sink>,
    closed: bool,
}

impl std::fmt::Debug for SessionLog {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SessionLog")
            .field("records", &self.records.len())
            .field("path", &self.sink.as_ref().map(|s| &s.path))
            .field("closed", &self.closed)
            .finish()
    }
}

impl Default for SessionLog {
    fn default() -> Self {
        Self::in_memory()
    }
}

impl SessionLog {
    pub fn in_memory() -> Self {
        Self {
            records: Vec::new(),
            sink: None,
            closed: false,
        }
    }

    /// Creates (truncating) a log file at `path`.
    pub fn create(path: impl AsRef<Path>, policy: FsyncPolicy) -> Result<Self, LogError> {
        let path = path.as_ref().to_path_buf();
        let file = File::create(&path).map_err(|source| LogError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self {
            records: Vec::new(),
            sink: Some(Sink {
                path,
                out: BufWriter::new(file),
                policy,
            }),
            closed: false,
        })
    }

    pub fn next_seq(&self) -> u64 {
        self.records.len() as u64
    }

    pub fn append(&mut self, r: LogRecord) -> Result<(), LogError> {
        if self.closed {
            return Err(LogError::Closed);
        }
        if r.seq != self.next_seq() {
            return Err(LogError::Ordering {
                expected: self.next_seq(),
                got: r.seq,
            });
        }
        if let Some(sink) = self.sink.as_mut() {
            let io = |source| LogError::Io {
                path: sink.path.display().to_string(),
                source,
            };
            let line = encode_record(&r);
            sink.out.write_all(line.as_bytes()).map_err(io)?;
            sink.out.write_all(b"\n").map_err(io)?;
            match sink.policy {
                FsyncPolicy::Buffered => {}
                FsyncPolicy::Flush => sink.out.flush().map_err(io)?,
                FsyncPolicy::Sync => {
                    sink.out.flush().map_err(io)?;
                    sink.out.get_ref().sync_data().map_err(io)?;
                }
            }
        }
        self.records.push(r);
        Ok(())
    }

    /// Flushes and syncs the file; further appends fail.
    pub fn close(&mut self) -> Result<(), LogError> {
        if self.closed {
            return Ok(());
        }
        self.closed = true;
        if let Some(sink) = self.sink.as_mut() {
            let io = |source| LogError::Io {
                path: sink.path.display().to_string(),
                source,
            };
            sink.out.flush().map_err(io)?;
            sink.out.get_ref().sync_all().map_err(io)?;
        }
        Ok(())
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn records(&self) -> &[LogRecord] {
        &self.records
    }

    pub fn path(&self) -> Option<&Path> {
        self.sink.as_ref().map(|s| s.path.as_path())
    }

    pub fn to_jsonl(&self) -> String {
        to_jsonl(&self.records)
    }
}

pub fn to_jsonl(records: &[LogRecord]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&encode_record(r));
        s.push('\n');
    }
    s
}
