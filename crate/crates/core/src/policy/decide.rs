use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{
    ActionKind, ActionParams, BeliefBase, Intent, IntentKind, LabelRef, QueryKind, State, Topic,
};
use crate::sim::tick_seed;
use crate::world::normalize_phrase;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    #[default]
    Rules,
    Llm,
}

impl Engine {
    pub fn as_str(self) -> &'static str {
        match self {
            Engine::Rules => "rules",
            Engine::Llm => "llm",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rules" => Ok(Engine::Rules),
            "llm" => Ok(Engine::Llm),
            other => Err(format!("unknown engine `{other}` (expected rules or llm)")),
        }
    }
}

/// Symbols handed to the renderer to pick a template.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RationaleTag {
    UserRequest,
    FreeChoice,
    PositionReport,
    StateReport,
    GoalReport,
    Clarification,
    ArrivalReport,
    Greeting,
    Smalltalk,
    NavigationFailure,
}

impl RationaleTag {
    pub const ALL: [RationaleTag; 10] = [
        RationaleTag::UserRequest,
        RationaleTag::FreeChoice,
        RationaleTag::PositionReport,
        RationaleTag::StateReport,
        RationaleTag::GoalReport,
        RationaleTag::Clarification,
        RationaleTag::ArrivalReport,
        RationaleTag::Greeting,
        RationaleTag::Smalltalk,
        RationaleTag::NavigationFailure,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RationaleTag::UserRequest => "user_request",
            RationaleTag::FreeChoice => "free_choice",
            RationaleTag::PositionReport => "position_report",
            RationaleTag::StateReport => "state_report",
            RationaleTag::GoalReport => "goal_report",
            RationaleTag::Clarification => "clarification",
            RationaleTag::ArrivalReport => "arrival_report",
            RationaleTag::Greeting => "greeting",
            RationaleTag::Smalltalk => "smalltalk",
            RationaleTag::NavigationFailure => "navigation_failure",
        }
    }

    /// Tag a chat about `topic` is rendered under.
    pub fn for_topic(topic: &Topic) -> RationaleTag {
        match topic {
            Topic::Greeting => RationaleTag::Greeting,
            Topic::PositionReport => RationaleTag::PositionReport,
            Topic::StateReport => RationaleTag::StateReport,
            Topic::GoalReport => RationaleTag::GoalReport,
            Topic::ArrivalReport => RationaleTag::ArrivalReport,
            Topic::Smalltalk => RationaleTag::Smalltalk,
            Topic::Clarify(_) => RationaleTag::Clarification,
            Topic::NavigationFailure(_) => RationaleTag::NavigationFailure,
        }
    }

    /// Action kind this tag accompanies.
    pub fn action(self) -> ActionKind {
        match self {
            RationaleTag::UserRequest | RationaleTag::FreeChoice => ActionKind::Move,
            _ => ActionKind::Chat,
        }
    }
}

impl fmt::Display for RationaleTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RationaleTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RationaleTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown rationale tag `{s}`"))
    }
}

/// The chosen action with its parameters and the tags that explain it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionDecision {
    pub params: ActionParams,
    pub rationale_tags: Vec<RationaleTag>,
}

impl ActionDecision {
    pub fn chat(topic: Topic) -> Self {
        let tag = RationaleTag::for_topic(&topic);
        Self {
            params: ActionParams::chat(topic),
            rationale_tags: vec![tag],
        }
    }

    pub fn action(&self) -> ActionKind {
        self.params.kind()
    }

    /// First tag; decisions built by this module always carry one.
    pub fn primary_tag(&self) -> RationaleTag {
        self.rationale_tags
            .first()
            .copied()
            .unwrap_or(match &self.params {
                ActionParams::Move { .. } => RationaleTag::UserRequest,
                ActionParams::Chat { topic, .. } => RationaleTag::for_topic(topic),
            })
    }
}

/// The user-facing event a decision answers. The utterance arrives already
/// parsed so both engines and the log agree on the intent.
#[derive(Debug, Clone, PartialEq)]
pub enum DecisionTrigger {
    SessionStart,
    UserUtterance { intent: Intent, t: f64 },
    GoalReached { label: String },
}

fn clarify_symbol(text: &str) -> String {
    let s = normalize_phrase(text).replace(' ', "_");
    if s.is_empty() {
        "request".to_string()
    } else {
        s
    }
}

fn move_to(base: &BeliefBase, label: &str, tag: RationaleTag) -> ActionDecision {
    match base.location(label) {
        Some(p) => ActionDecision {
            params: ActionParams::move_to(label, p),
            rationale_tags: vec![tag],
        },
        None => ActionDecision::chat(Topic::Clarify(clarify_symbol(label))),
    }
}

/// Seeded uniform draw over believed locations, excluding the one the robot
/// already stands at. The draw depends on the session seed and event time only.
pub fn free_choice(state: &State, base: &BeliefBase, seed: u64, t: f64) -> Option<String> {
    let here = state.nav.pose.position();
    let candidates: Vec<String> = base
        .location_labels()
        .into_iter()
        .filter(|l| {
            base.location(l)
                .is_some_and(|p| p.distance(here) > state.nav.arrival_tolerance)
        })
        .collect();
    if candidates.is_empty() {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(tick_seed(seed, t.to_bits()));
    Some(candidates[rng.random_range(0..candidates.len())].clone())
}

/// Rules engine. Pure in (state, base, trigger, seed); the frame is
/// not an input.
pub fn decide(
    state: &State,
    base: &BeliefBase,
    trigger: &DecisionTrigger,
    seed: u64,
) -> ActionDecision {
    match trigger {
        DecisionTrigger::SessionStart => ActionDecision::chat(Topic::Greeting),
        DecisionTrigger::GoalReached { .. } => ActionDecision::chat(Topic::ArrivalReport),
        DecisionTrigger::UserUtterance { intent, t } => match &intent.kind {
            IntentKind::Goto {
                target: LabelRef::Resolved { label },
            } => move_to(base, label, RationaleTag::UserRequest),
            IntentKind::Goto {
                target: LabelRef::Unresolved { text },
            } => ActionDecision::chat(Topic::Clarify(clarify_symbol(text))),
            IntentKind::Query { about } => ActionDecision::chat(match about {
                QueryKind::Position => Topic::PositionReport,
                QueryKind::State => Topic::StateReport,
                QueryKind::Goal => Topic::GoalReport,
            }),
            IntentKind::FreeChoice => match free_choice(state, base, seed, *t) {
                Some(label) => move_to(base, &label, RationaleTag::FreeChoice),
                None => ActionDecision::chat(Topic::Clarify("free_choice".into())),
            },
            IntentKind::Smalltalk => ActionDecision::chat(Topic::Smalltalk),
            IntentKind::Unknown => ActionDecision::chat(Topic::Clarify("request".into())),
        },
    }
}
