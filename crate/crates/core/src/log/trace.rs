use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::LogRecord;
use crate::geometry::Pose;
use crate::model::{ActionParams, EventPayload};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub t: f64,
    #[serde(flatten)]
    pub action: ActionParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseSample {
    pub t: f64,
    pub pose: Pose,
}

/// The frame-independent part of a session: executed actions and 1 Hz
/// ground-truth poses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorTrace {
    pub entries: Vec<TraceEntry>,
    pub pose_samples: Vec<PoseSample>,
    pub hash: String,
}

// "-0.000000" and "0.000000" must hash alike
fn fixed(v: f64, digits: usize) -> String {
    let s = format!("{v:.digits$}");
    match s.strip_prefix('-') {
        Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_string(),
        _ => s,
    }
}

impl BehaviorTrace {
    pub fn new(entries: Vec<TraceEntry>, pose_samples: Vec<PoseSample>) -> Self {
        let hash = Self::digest(&entries, &pose_samples);
        Self {
            entries,
            pose_samples,
            hash,
        }
    }

    /// Extracts the trace of a session. Pose samples come from tick records
    /// that fall on whole seconds of simulated time.
    pub fn from_records(records: &[LogRecord]) -> Self {
        let (dt, per_second) = records
            .iter()
            .find_map(|r| match &r.event.payload {
                EventPayload::SessionStart { settings, .. } => {
                    Some((settings.dt, settings.ticks_per_second()))
                }
                _ => None,
            })
            .unwrap_or((crate::sim::DEFAULT_DT, 20));
        let mut entries = Vec::new();
        let mut samples = Vec::new();
        for r in records {
            if let Some(a) = &r.action {
                entries.push(TraceEntry {
                    t: r.event.t,
                    action: a.clone(),
                });
            }
            if let EventPayload::Tick { pose, .. } = &r.event.payload {
                let tick = (r.event.t / dt).round() as u64;
                if tick.is_multiple_of(per_second) {
                    samples.push(PoseSample {
                        t: r.event.t,
                        pose: *pose,
                    });
                }
            }
        }
        Self::new(entries, samples)
    }

    /// Canonical text the hash is taken over, one line per item.
    pub fn canonical_lines(entries: &[TraceEntry], samples: &[PoseSample]) -> String {
        let mut out = String::new();
        for e in entries {
            let t = fixed(e.t, 3);
            match &e.action {
                ActionParams::Move { label, target } => {
                    let _ = writeln!(
                        out,
                        "A {t} move {label} {} {} {}",
                        fixed(target.x, 6),
                        fixed(target.y, 6),
                        fixed(target.theta, 6)
                    );
                }
                ActionParams::Chat { topic, addressee } => {
                    let _ = writeln!(out, "A {t} chat {} {addressee}", topic.symbol());
                }
            }
        }
        for s in samples {
            let _ = writeln!(
                out,
                "P {} {} {} {}",
                fixed(s.t, 3),
                fixed(s.pose.x, 6),
                fixed(s.pose.y, 6),
                fixed(s.pose.theta, 6)
            );
        }
        out
    }

    pub fn digest(entries: &[TraceEntry], samples: &[PoseSample]) -> String {
        hex::encode(Sha256::digest(
            Self::canonical_lines(entries, samples).as_bytes(),
        ))
    }

    /// True when the stored hash matches the content.
    pub fn verify(&self) -> bool {
        self.hash == Self::digest(&self.entries, &self.pose_samples)
    }

    pub fn duration(&self) -> f64 {
        let last_entry = self.entries.last().map_or(0.0, |e| e.t);
        let last_sample = self.pose_samples.last().map_or(0.0, |s| s.t);
        last_entry.max(last_sample)
    }
}
