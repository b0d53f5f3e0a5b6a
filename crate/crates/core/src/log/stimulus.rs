use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BehaviorTrace, LogError, LogRecord};
use crate::frames::{Frame, Provenance};
use crate::geometry::Rect;
use crate::model::EventPayload;

pub const BUNDLE_FORMAT_VERSION: u32 = 1;
const FRONT_FOV_DEG: f64 = 90.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    User,
    Robot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptLine {
    pub t: f64,
    pub speaker: Speaker,
    pub text: String,
    /// Absent on user lines.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

/// Hints for an external renderer: a top-down plan view of the world
/// bounds and a first-person view from the robot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Viewpoints {
    pub plan: Rect,
    pub front_fov_deg: f64,
}

/// One experiment unit: a single behavior shown with three narrations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusItem {
    pub scenario: String,
    pub world: String,
    pub seed: u64,
    pub script: String,
    pub trace: BehaviorTrace,
    pub transcripts: BTreeMap<Frame, Vec<TranscriptLine>>,
    pub viewpoints: Viewpoints,
}

impl StimulusItem {
    pub fn frames(&self) -> Vec<Frame> {
        self.transcripts.keys().copied().collect()
    }
}

struct RunSummary {
    frame: Frame,
    world: String,
    bounds: Rect,
    seed: u64,
    inputs: Vec<(f64, String)>,
    trace: BehaviorTrace,
    transcript: Vec<TranscriptLine>,
}

fn summarize(records: &[LogRecord]) -> Result<RunSummary, LogError> {
    let (world, settings) = match records.first().map(|r| &r.event.payload) {
        Some(EventPayload::SessionStart { world, settings }) => (world, settings),
        _ => return Err(LogError::MissingSessionStart),
    };
    let mut inputs = Vec::new();
    let mut transcript: Vec<TranscriptLine> = Vec::new();
    for r in records {
        let t = r.event.t;
        match &r.event.payload {
            EventPayload::UserUtterance { text } => {
                inputs.push((t, text.clone()));
                transcript.push(TranscriptLine {
                    t,
                    speaker: Speaker::User,
                    text: text.clone(),
                    provenance: None,
                });
            }
            EventPayload::LlmResponse { .. } => {
                // a rephrasing replaces the draft it was produced from
                if let Some(u) = &r.utterance {
                    if let Some(last) = transcript
                        .iter_mut()
                        .rev()
                        .find(|l| l.speaker == Speaker::Robot)
                    {
                        last.text = u.text.clone();
                        last.provenance = Some(u.provenance);
                    }
                }
            }
            _ => {
                if let Some(u) = &r.utterance {
                    transcript.push(TranscriptLine {
                        t,
                        speaker: Speaker::Robot,
                        text: u.text.clone(),
                        provenance: Some(u.provenance),
                    });
                }
            }
        }
    }
    Ok(RunSummary {
        frame: settings.frame,
        world: world.name.clone(),
        bounds: world.bounds,
        seed: settings.seed,
        inputs,
        trace: BehaviorTrace::from_records(records),
        transcript,
    })
}

/// Pairs one run per frame into a stimulus item, refusing when the runs
/// do not show the same behavior.
pub fn export_stimuli(
    scenario: &str,
    script: &str,
    runs: &[Vec<LogRecord>],
) -> Result<StimulusItem, LogError> {
    let summaries = runs
        .iter()
        .map(|r| summarize(r))
        .collect::<Result<Vec<_>, _>>()?;
    let mut frames: Vec<Frame> = summaries.iter().map(|s| s.frame).collect();
    frames.sort();
    if frames != Frame::ALL.to_vec() {
        let names: Vec<&str> = frames.iter().map(|f| f.as_str()).collect();
        return Err(LogError::IncompleteFrameSet(format!(
            "got [{}]",
            names.join(", ")
        )));
    }
    let reference = &summaries[0];
    for s in &summaries[1..] {
        let mismatch = |what: &str, a: String, b: String| LogError::InvarianceViolation {
            what: what.to_string(),
            detail: format!(
                "{}: {a} vs {}: {b}",
                reference.frame.as_str(),
                s.frame.as_str()
            ),
        };
        if s.world != reference.world {
            return Err(mismatch("world", reference.world.clone(), s.world.clone()));
        }
        if s.seed != reference.seed {
            return Err(mismatch(
                "seed",
                reference.seed.to_string(),
                s.seed.to_string(),
            ));
        }
        if s.inputs != reference.inputs {
            return Err(mismatch(
                "command script",
                format!("{} inputs", reference.inputs.len()),
                format!("{} inputs", s.inputs.len()),
            ));
        }
        if s.trace.hash != reference.trace.hash {
            return Err(mismatch(
                "trace hash",
                reference.trace.hash.clone(),
                s.trace.hash.clone(),
            ));
        }
    }
    let transcripts = summaries
        .iter()
        .map(|s| (s.frame, s.transcript.clone()))
        .collect();
    Ok(StimulusItem {
        scenario: scenario.to_string(),
        world: reference.world.clone(),
        seed: reference.seed,
        script: script.to_string(),
        trace: reference.trace.clone(),
        transcripts,
        viewpoints: Viewpoints {
            plan: reference.bounds,
            front_fov_deg: FRONT_FOV_DEG,
        },
    })
}

fn write(path: &Path, contents: &str) -> Result<(), LogError> {
    fs::write(path, contents).map_err(|source| LogError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("bundle parts serialize");
    s.push('\n');
    s
}

/// Writes `trace.json`, `transcripts/<frame>.{json,txt}` and
/// `metadata.json` under `dir`.
pub fn write_bundle(item: &StimulusItem, dir: impl AsRef<Path>) -> Result<(), LogError> {
    let dir = dir.as_ref();
    let transcripts = dir.join("transcripts");
    fs::create_dir_all(&transcripts).map_err(|source| LogError::Io {
        path: transcripts.display().to_string(),
        source,
    })?;
    write(&dir.join("trace.json"), &pretty(&item.trace))?;
    for (frame, lines) in &item.transcripts {
        write(
            &transcripts.join(format!("{}.json", frame.as_str())),
            &pretty(lines),
        )?;
        let text: String = lines
            .iter()
            .map(|l| {
                let who = match l.speaker {
                    Speaker::User => "user",
                    Speaker::Robot => "robot",
                };
                format!("[{:>8.2}] {who}: {}\n", l.t, l.text)
            })
            .collect();
        write(&transcripts.join(format!("{}.txt", frame.as_str())), &text)?;
    }
    let metadata = serde_json::json!({
        "format_version": BUNDLE_FORMAT_VERSION,
        "scenario": item.scenario,
        "world": item.world,
        "seed": item.seed,
        "script": item.script,
        "trace_hash": item.trace.hash,
        "frames": item.frames().iter().map(|f| f.as_str()).collect::<Vec<_>>(),
        "viewpoints": {
            "plan": { "bounds": item.viewpoints.plan },
            "front": { "fov_deg": item.viewpoints.front_fov_deg },
        },
    });
    write(&dir.join("metadata.json"), &pretty(&metadata))
}
