use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ModelError, Predicate, Proposition};
use crate::geometry::{Point, Pose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Identity,
    Capability,
    Position,
    Locations,
    Navigation,
    UserIntent,
}

impl Category {
    /// The category→predicate compatibility table.
    pub fn predicate(self) -> Predicate {
        match self {
            Category::Identity => Predicate::Identity,
            Category::Capability => Predicate::Capability,
            Category::Position => Predicate::At,
            Category::Locations => Predicate::Located,
            Category::Navigation => Predicate::Status,
            Category::UserIntent => Predicate::IntendsUser,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    System,
    Configuration,
    Odometry,
    Navigation,
    UserInput,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::System => "system",
            Source::Configuration => "configuration",
            Source::Odometry => "odometry",
            Source::Navigation => "navigation",
            Source::UserInput => "user_input",
        }
    }
}

/// A categorized proposition with confidence and source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    pub category: Category,
    pub content: Proposition,
    pub confidence: f64,
    pub source: Source,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BeliefKey {
    pub category: Category,
    pub head: String,
}

impl Belief {
    pub fn new(
        category: Category,
        content: Proposition,
        confidence: f64,
        source: Source,
    ) -> Result<Self, ModelError> {
        let b = Self {
            category,
            content,
            confidence,
            source,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(ModelError::Domain(format!(
                "confidence {} outside [0, 1]",
                self.confidence
            )));
        }
        let predicate = self.content.validate()?;
        if predicate != self.category.predicate() {
            return Err(ModelError::Schema(format!(
                "category {:?} cannot hold predicate `{}`",
                self.category,
                predicate.name()
            )));
        }
        Ok(())
    }

    pub fn key(&self) -> BeliefKey {
        let keyed_by_subject = Predicate::lookup(&self.content.predicate)
            .map(Predicate::keyed_by_subject)
            .unwrap_or(false);
        let head = match self.content.subject() {
            Some(s) if keyed_by_subject => s.to_string(),
            _ => self.content.predicate.clone(),
        };
        BeliefKey {
            category: self.category,
            head,
        }
    }
}

/// The belief base: at most one belief per `(category, head)` key.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<Belief>", try_from = "Vec<Belief>")]
pub struct BeliefBase {
    beliefs: BTreeMap<BeliefKey, Belief>,
}

impl BeliefBase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.beliefs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beliefs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Belief> {
        self.beliefs.values()
    }

    pub fn get(&self, category: Category, head: &str) -> Option<&Belief> {
        self.beliefs.get(&BeliefKey {
            category,
            head: head.to_string(),
        })
    }

    pub fn upsert(&mut self, b: Belief) -> Result<(), ModelError> {
        b.validate()?;
        self.beliefs.insert(b.key(), b);
        Ok(())
    }

    pub fn location(&self, label: &str) -> Option<Point> {
        self.get(Category::Locations, label)
            .and_then(|b| b.content.args.get(1))
            .and_then(|t| t.as_point())
    }

    pub fn location_labels(&self) -> Vec<String> {
        self.beliefs
            .values()
            .filter(|b| b.category == Category::Locations)
            .filter_map(|b| b.content.subject().map(str::to_string))
            .collect()
    }

    pub fn position(&self) -> Option<&Belief> {
        self.beliefs
            .values()
            .find(|b| b.category == Category::Position)
    }
}

/// Value-semantics upsert: returns a new base, leaving `base` untouched.
pub fn upsert_belief(base: &BeliefBase, b: Belief) -> Result<BeliefBase, ModelError> {
    let mut next = base.clone();
    next.upsert(b)?;
    Ok(next)
}

impl From<BeliefBase> for Vec<Belief> {
    fn from(base: BeliefBase) -> Self {
        base.beliefs.into_values().collect()
    }
}

impl TryFrom<Vec<Belief>> for BeliefBase {
    type Error = ModelError;

    fn try_from(beliefs: Vec<Belief>) -> Result<Self, Self::Error> {
        let mut base = BeliefBase::new();
        for b in beliefs {
            let key = b.key();
            if base.beliefs.contains_key(&key) {
                return Err(ModelError::Schema(format!("duplicate belief key {key:?}")));
            }
            base.upsert(b)?;
        }
        Ok(base)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    UserCommand,
    Internal,
}

pub const USER_COMMAND_PRIORITY: f64 = 0.5;
pub const INTERNAL_PRIORITY: f64 = 0.1;

/// A goal with id, priority and origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Desire {
    pub id: String,
    pub goal: Proposition,
    pub priority: f64,
    pub origin: Origin,
}

impl Desire {
    pub fn new(
        id: impl Into<String>,
        goal: Proposition,
        priority: f64,
        origin: Origin,
    ) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&priority) {
            return Err(ModelError::Domain(format!(
                "priority {priority} outside [0, 1]"
            )));
        }
        goal.validate()?;
        Ok(Self {
            id: id.into(),
            goal,
            priority,
            origin,
        })
    }
}

/// What a chat action talks about.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Topic {
    Greeting,
    PositionReport,
    StateReport,
    GoalReport,
    ArrivalReport,
    Smalltalk,
    /// Asks the user to restate an unknown destination.
    Clarify(String),
    /// No route to the named label.
    NavigationFailure(String),
}

impl Topic {
    pub fn symbol(&self) -> String {
        match self {
            Topic::Greeting => "greeting".into(),
            Topic::PositionReport => "position_report".into(),
            Topic::StateReport => "state_report".into(),
            Topic::GoalReport => "goal_report".into(),
            Topic::ArrivalReport => "arrival_report".into(),
            Topic::Smalltalk => "smalltalk".into(),
            Topic::Clarify(s) => format!("clarify:{s}"),
            Topic::NavigationFailure(s) => format!("navigation_failure:{s}"),
        }
    }

    pub fn parse(s: &str) -> Result<Topic, ModelError> {
        Ok(match s {
            "greeting" => Topic::Greeting,
            "position_report" => Topic::PositionReport,
            "state_report" => Topic::StateReport,
            "goal_report" => Topic::GoalReport,
            "arrival_report" => Topic::ArrivalReport,
            "smalltalk" => Topic::Smalltalk,
            _ => {
                if let Some(rest) = s.strip_prefix("clarify:") {
                    Topic::Clarify(rest.to_string())
                } else if let Some(rest) = s.strip_prefix("navigation_failure:") {
                    Topic::NavigationFailure(rest.to_string())
                } else {
                    return Err(ModelError::Schema(format!("unknown topic `{s}`")));
                }
            }
        })
    }
}

impl fmt::Display for Topic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.symbol())
    }
}

impl From<Topic> for String {
    fn from(t: Topic) -> Self {
        t.symbol()
    }
}

impl TryFrom<String> for Topic {
    type Error = ModelError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        Topic::parse(&s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Move,
    Chat,
}

impl ActionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ActionKind::Move => "move",
            ActionKind::Chat => "chat",
        }
    }
}

pub const USER_ADDRESSEE: &str = "user";

/// Executable parameters of an action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum ActionParams {
    Move { label: String, target: Pose },
    Chat { topic: Topic, addressee: String },
}

impl ActionParams {
    pub fn kind(&self) -> ActionKind {
        match self {
            ActionParams::Move { .. } => ActionKind::Move,
            ActionParams::Chat { .. } => ActionKind::Chat,
        }
    }

    pub fn chat(topic: Topic) -> Self {
        ActionParams::Chat {
            topic,
            addressee: USER_ADDRESSEE.to_string(),
        }
    }

    pub fn move_to(label: &str, p: Point) -> Self {
        ActionParams::Move {
            label: label.to_string(),
            target: Pose::new(p.x, p.y, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntentionStatus {
    Pending,
    Active,
    Succeeded,
    Failed,
    Cancelled,
}

/// The committed action, its parameters and status, tagged with the desire it was promoted from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intention {
    #[serde(flatten)]
    pub params: ActionParams,
    pub status: IntentionStatus,
    pub desire: String,
}

impl Intention {
    pub fn action(&self) -> ActionKind {
        self.params.kind()
    }

    pub fn is_live_move(&self) -> bool {
        self.action() == ActionKind::Move
            && matches!(
                self.status,
                IntentionStatus::Pending | IntentionStatus::Active
            )
    }
}

/// Direct desire→intention promotion. Desires are visited by descending
/// priority, ties by id; at most one move intention is emitted.
pub fn promote(desires: &[Desire], base: &BeliefBase) -> Vec<Intention> {
    let mut ordered: Vec<&Desire> = desires.iter().collect();
    ordered.sort_by(|a, b| {
        b.priority
            .total_cmp(&a.priority)
            .then_with(|| a.id.cmp(&b.id))
    });

    let mut out = Vec::new();
    let mut moved = false;
    for d in ordered {
        let pending = |params| Intention {
            params,
            status: IntentionStatus::Pending,
            desire: d.id.clone(),
        };
        let subject = d.goal.subject().unwrap_or_default();
        match Predicate::lookup(&d.goal.predicate) {
            Ok(Predicate::Goto) => match base.location(subject) {
                Some(p) if !moved => {
                    moved = true;
                    out.push(pending(ActionParams::move_to(subject, p)));
                }
                Some(_) => {}
                None => out.push(pending(ActionParams::chat(Topic::Clarify(subject.into())))),
            },
            Ok(Predicate::Respond) => match Topic::parse(subject) {
                Ok(topic) => out.push(pending(ActionParams::chat(topic))),
                Err(_) => out.push(pending(ActionParams::chat(Topic::Clarify(subject.into())))),
            },
            _ => out.push(pending(ActionParams::chat(Topic::Clarify(
                d.goal.to_string(),
            )))),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn location(label: &str, x: f64, y: f64) -> Belief {
        Belief::new(
            Category::Locations,
            Proposition::located(label, Point::new(x, y)),
            1.0,
            Source::Configuration,
        )
        .unwrap()
    }

    fn bookstore_base() -> BeliefBase {
        let mut base = BeliefBase::new();
        base.upsert(location("wellness", -1.56, -1.59)).unwrap();
        base.upsert(location("cash", 3.2, 3.6)).unwrap();
        base
    }

    fn desire(id: &str, goal: Proposition, priority: f64) -> Desire {
        Desire::new(id, goal, priority, Origin::UserCommand).unwrap()
    }

    #[test]
    fn odometry_position_belief() {
        let b = Belief::new(
            Category::Position,
            Proposition::at("robot", Pose::new(-0.72, -0.62, 0.0)),
            0.95,
            Source::Odometry,
        )
        .unwrap();
        let base = upsert_belief(&BeliefBase::new(), b).unwrap();
        assert_eq!(base.len(), 1);
        assert_eq!(base.position().unwrap().confidence, 0.95);
    }

    #[test]
    fn upsert_same_key_keeps_size_latest_wins() {
        let base = upsert_belief(&BeliefBase::new(), location("cash", 0.0, 0.0)).unwrap();
        let base = upsert_belief(&base, location("cash", 1.0, 2.0)).unwrap();
        assert_eq!(base.len(), 1);
        assert_eq!(base.location("cash"), Some(Point::new(1.0, 2.0)));
    }

    #[test]
    fn confidence_out_of_range_is_domain_error() {
        let b = Belief {
            category: Category::Locations,
            content: Proposition::located("cash", Point::new(0.0, 0.0)),
            confidence: 1.2,
            source: Source::Configuration,
        };
        assert!(matches!(
            upsert_belief(&BeliefBase::new(), b),
            Err(ModelError::Domain(_))
        ));
    }

    #[test]
    fn category_predicate_mismatch_is_schema_error() {
        let err = Belief::new(
            Category::Position,
            Proposition::located("cash", Point::new(0.0, 0.0)),
            0.5,
            Source::Odometry,
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::Schema(_)));
    }

    #[test]
    fn promote_goto_known_label_moves() {
        let out = promote(
            &[desire("u0001", Proposition::goto("wellness"), 0.5)],
            &bookstore_base(),
        );
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].status, IntentionStatus::Pending);
        match &out[0].params {
            ActionParams::Move { label, target } => {
                assert_eq!(label, "wellness");
                assert_eq!((target.x, target.y), (-1.56, -1.59));
            }
            other => panic!("expected move, got {other:?}"),
        }
    }

    #[test]
    fn promote_empty_is_empty() {
        assert!(promote(&[], &bookstore_base()).is_empty());
    }

    #[test]
    fn promote_unknown_label_clarifies() {
        let out = promote(
            &[desire("u0001", Proposition::goto("swimming_pool"), 0.5)],
            &bookstore_base(),
        );
        assert_eq!(
            out[0].params,
            ActionParams::chat(Topic::Clarify("swimming_pool".into()))
        );
    }

    #[test]
    fn promote_respond_chats_and_orders_by_priority_then_id() {
        let ds = [
            desire("b", Proposition::respond("position_report"), 0.5),
            desire("a", Proposition::respond("state_report"), 0.5),
            desire("c", Proposition::goto("cash"), 0.9),
            desire("d", Proposition::goto("wellness"), 0.1),
        ];
        let out = promote(&ds, &bookstore_base());
        let ids: Vec<_> = out.iter().map(|i| i.desire.as_str()).collect();
        // the low-priority goto yields no second move
        assert_eq!(ids, ["c", "a", "b"]);
    }

    #[test]
    fn topic_symbols_round_trip() {
        for t in [
            Topic::Greeting,
            Topic::PositionReport,
            Topic::StateReport,
            Topic::GoalReport,
            Topic::ArrivalReport,
            Topic::Smalltalk,
            Topic::Clarify("the moon".into()),
            Topic::NavigationFailure("cash".into()),
        ] {
            assert_eq!(Topic::parse(&t.symbol()).unwrap(), t);
        }
        assert!(Topic::parse("poetry").is_err());
    }

    fn arb_belief() -> impl Strategy<Value = Belief> {
        let labels = prop::sample::select(vec!["cash", "wellness", "fantasy", "tv", "bed"]);
        prop_oneof![
            (labels.clone(), -5.0f64..5.0, -5.0f64..5.0, 0.0f64..=1.0).prop_map(|(l, x, y, c)| {
                Belief::new(
                    Category::Locations,
                    Proposition::located(l, Point::new(x, y)),
                    c,
                    Source::Configuration,
                )
                .unwrap()
            }),
            (-5.0f64..5.0, -5.0f64..5.0, -3.0f64..3.0, 0.0f64..=1.0).prop_map(|(x, y, t, c)| {
                Belief::new(
                    Category::Position,
                    Proposition::at("robot", Pose::new(x, y, t)),
                    c,
                    Source::Odometry,
                )
                .unwrap()
            }),
            (
                prop::sample::select(vec!["idle", "navigating", "error"]),
                0.0f64..=1.0
            )
                .prop_map(|(s, c)| {
                    Belief::new(
                        Category::Navigation,
                        Proposition::unary(Predicate::Status, s),
                        c,
                        Source::Navigation,
                    )
                    .unwrap()
                }),
            (prop::sample::select(vec!["move", "chat"]), 0.0f64..=1.0).prop_map(|(s, c)| {
                Belief::new(
                    Category::Capability,
                    Proposition::unary(Predicate::Capability, s),
                    c,
                    Source::System,
                )
                .unwrap()
            }),
        ]
    }

    fn arb_desires() -> impl Strategy<Value = Vec<Desire>> {
        prop::collection::vec(
            (
                0u32..20,
                prop::sample::select(vec![
                    "cash",
                    "wellness",
                    "pool",
                    "position_report",
                    "state_report",
                ]),
                prop::bool::ANY,
                0.0f64..=1.0,
            ),
            0..8,
        )
        .prop_map(|items| {
            items
                .into_iter()
                .enumerate()
                .map(|(i, (n, label, is_goto, p))| {
                    let goal = if is_goto {
                        Proposition::goto(label)
                    } else {
                        Proposition::respond(label)
                    };
                    desire(&format!("d{n:02}-{i}"), goal, p)
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn keys_stay_unique_under_any_upsert_sequence(beliefs in prop::collection::vec(arb_belief(), 0..40)) {
            let mut base = BeliefBase::new();
            for b in beliefs {
                base = upsert_belief(&base, b).unwrap();
            }
            let keys: Vec<_> = base.iter().map(Belief::key).collect();
            let mut dedup = keys.clone();
            dedup.dedup();
            prop_assert_eq!(keys.len(), dedup.len());
            for b in base.iter() {
                prop_assert!(b.validate().is_ok());
            }
        }

        #[test]
        fn promote_is_pure_and_emits_at_most_one_move(desires in arb_desires()) {
            let base = bookstore_base();
            let first = promote(&desires, &base);
            prop_assert_eq!(&first, &promote(&desires, &base));
            prop_assert!(first.iter().filter(|i| i.action() == ActionKind::Move).count() <= 1);
        }

        #[test]
        fn belief_base_serde_round_trip(beliefs in prop::collection::vec(arb_belief(), 0..20)) {
            let mut base = BeliefBase::new();
            for b in beliefs {
                base.upsert(b).unwrap();
            }
            let json = serde_json::to_string(&base).unwrap();
            let back: BeliefBase = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(base, back);
        }
    }

    #[test]
    fn base_rejects_duplicate_keys_on_deserialize() {
        let b = location("cash", 0.0, 0.0);
        let json = serde_json::to_string(&vec![b.clone(), b]).unwrap();
        assert!(serde_json::from_str::<BeliefBase>(&json).is_err());
    }
}
