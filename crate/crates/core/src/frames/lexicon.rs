use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Frame, Utterance};

/// Marker vocabulary per frame. A marker matches case-insensitively at the
/// start of a word, so `believe` also matches "believed".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconSpec {
    /// At least one of these must appear.
    pub required: BTreeMap<Frame, Vec<String>>,
    /// None of these may appear.
    pub forbidden: BTreeMap<Frame, Vec<String>>,
}

const AGENTIVE: &[&str] = &["believe", "intend", "want", "notice", "think"];
const TELEOLOGICAL: &[&str] = &["goal", "purpose", "function", "objective", "designed"];
const MECHANISTIC: &[&str] = &[
    "Odometry reading",
    "Publishing Twist",
    "Executing velocity command",
    "coordinates",
];

fn markers(frame: Frame) -> &'static [&'static str] {
    match frame {
        Frame::Agentive => AGENTIVE,
        Frame::Teleological => TELEOLOGICAL,
        Frame::Mechanistic => MECHANISTIC,
    }
}

impl Default for LexiconSpec {
    /// Each frame requires its own markers and forbids the union of the others'.
    fn default() -> Self {
        let own = |f: Frame| markers(f).iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let others = |f: Frame| {
            Frame::ALL
                .into_iter()
                .filter(|g| *g != f)
                .flat_map(|g| markers(g).iter().map(|s| s.to_string()))
                .collect::<Vec<_>>()
        };
        Self {
            required: Frame::ALL.into_iter().map(|f| (f, own(f))).collect(),
            forbidden: Frame::ALL.into_iter().map(|f| (f, others(f))).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    MissingRequired { frame: Frame },
    Forbidden { frame: Frame, marker: String },
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// True when `marker` occurs in `text` starting at a word boundary.
fn has_marker(text: &str, marker: &str) -> bool {
    let hay = text.to_lowercase();
    let needle = marker.to_lowercase();
    hay.match_indices(&needle).any(|(i, _)| {
        hay[..i]
            .chars()
            .next_back()
            .is_none_or(|c| !is_word_char(c))
    })
}

/// Every missing-required and forbidden-marker violation of `u` under its frame.
pub fn check_lexicon(u: &Utterance, spec: &LexiconSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    let required = spec
        .required
        .get(&u.frame)
        .map(Vec::as_slice)
        .unwrap_or(&[]);
    if !required.is_empty() && !required.iter().any(|m| has_marker(&u.text, m)) {
        out.push(Violation::MissingRequired { frame: u.frame });
    }
    for m in spec
        .forbidden
        .get(&u.frame)
        .map(Vec::as_slice)
        .unwrap_or(&[])
    {
        if has_marker(&u.text, m) {
            out.push(Violation::Forbidden {
                frame: u.frame,
                marker: m.clone(),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::Provenance;

    fn utt(frame: Frame, text: &str) -> Utterance {
        Utterance {
            text: text.into(),
            frame,
            topic: "test".into(),
            provenance: Provenance::Llm,
        }
    }

    #[test]
    fn mechanistic_text_under_agentive_is_flagged() {
        let v = check_lexicon(
            &utt(
                Frame::Agentive,
                "Publishing Twist: linear.x=0.10, angular.z=0.00",
            ),
            &LexiconSpec::default(),
        );
        assert!(v.contains(&Violation::MissingRequired {
            frame: Frame::Agentive
        }));
        assert!(v.iter().any(
            |x| matches!(x, Violation::Forbidden { marker, .. } if marker == "Publishing Twist")
        ));
    }

    #[test]
    fn mental_vocabulary_under_mechanistic_is_flagged() {
        let v = check_lexicon(
            &utt(
                Frame::Mechanistic,
                "I believe the coordinates are (1.00, 2.00).",
            ),
            &LexiconSpec::default(),
        );
        assert_eq!(
            v,
            vec![Violation::Forbidden {
                frame: Frame::Mechanistic,
                marker: "believe".into()
            }]
        );
    }

    #[test]
    fn markers_match_at_word_start_only() {
        assert!(has_marker("I BELIEVED it", "believe"));
        assert!(has_marker("goals matter", "goal"));
        assert!(!has_marker("a subgoal", "goal"));
        assert!(has_marker("x. Odometry reading: y", "odometry reading"));
    }

    #[test]
    fn compliant_texts_pass() {
        let spec = LexiconSpec::default();
        assert!(check_lexicon(&utt(Frame::Agentive, "I think so."), &spec).is_empty());
        assert!(
            check_lexicon(&utt(Frame::Teleological, "Its purpose is clear."), &spec).is_empty()
        );
        assert!(check_lexicon(
            &utt(Frame::Mechanistic, "Executing velocity command."),
            &spec
        )
        .is_empty());
    }
}
