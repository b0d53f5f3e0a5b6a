use super::{
    ActionKind, Belief, BeliefBase, Category, Desire, ErrorOrigin, Event, EventPayload, Intent,
    IntentKind, Intention, IntentionStatus, LabelRef, ModelError, NavGoal, OperationalStatus,
    Origin, Predicate, Proposition, Source, State, Twist, USER_COMMAND_PRIORITY,
};
use crate::geometry::Pose;

/// Result of applying one event: the successor snapshot plus any desires the
/// event generated (the caller owns the active desire set).
#[derive(Debug, Clone, PartialEq)]
pub struct Applied {
    pub state: State,
    pub beliefs: BeliefBase,
    pub intention: Option<Intention>,
    pub desires: Vec<Desire>,
}

/// Deterministic update rule. Pure: inputs are never mutated.
pub fn apply_event(
    state: &State,
    base: &BeliefBase,
    intention: Option<&Intention>,
    e: &Event,
) -> Result<Applied, ModelError> {
    if !e.t.is_finite() {
        return Err(ModelError::MalformedEvent("non-finite timestamp".into()));
    }
    if e.t < state.clock {
        return Err(ModelError::TimeRegression {
            last: state.clock,
            got: e.t,
        });
    }
    let mut s = state.clone();
    let mut b = base.clone();
    let mut i = intention.cloned();
    let mut desires = Vec::new();
    s.clock = e.t;

    match &e.payload {
        EventPayload::SessionStart { .. } => {
            s.robot.status = OperationalStatus::Idle;
            s.nav.goal = None;
            s.nav.engaged = false;
            s.nav.command = Twist::default();
            b = initial_beliefs(&s)?;
            i = None;
        }
        EventPayload::UserUtterance { text } => {
            s.user.last_utterance = Some(text.clone());
        }
        EventPayload::CommandParsed { intent, goal } => {
            b.upsert(Belief::new(
                Category::UserIntent,
                Proposition::unary(Predicate::IntendsUser, intent.symbol()),
                intent_confidence(intent),
                Source::UserInput,
            )?)?;
            s.user.intent = Some(intent.clone());
            if let Some(goal) = goal {
                s.user.commands += 1;
                desires.push(Desire::new(
                    format!("u{:04}", s.user.commands),
                    goal.clone(),
                    USER_COMMAND_PRIORITY,
                    Origin::UserCommand,
                )?);
            }
        }
        EventPayload::NavGoalSet { label, target } => {
            if !target.is_finite() {
                return Err(ModelError::MalformedEvent(
                    "non-finite navigation target".into(),
                ));
            }
            s.nav.goal = Some(NavGoal {
                label: label.clone(),
                target: *target,
                progress: 0.0,
            });
            s.nav.engaged = true;
            s.robot.status = OperationalStatus::Navigating;
            b.upsert(navigation_belief(OperationalStatus::Navigating)?)?;
            if let Some(int) = i.as_mut() {
                if int.action() == ActionKind::Move && int.status == IntentionStatus::Pending {
                    int.status = IntentionStatus::Active;
                }
            }
        }
        EventPayload::Tick {
            odometry,
            command,
            progress,
            ..
        } => {
            s.nav.command = *command;
            if let (Some(goal), Some(p)) = (s.nav.goal.as_mut(), progress) {
                goal.progress = p.clamp(0.0, 1.0);
            }
            refresh_position(&mut s, &mut b, *odometry)?;
        }
        EventPayload::NavProgress { progress, pose } => {
            if let Some(goal) = s.nav.goal.as_mut() {
                goal.progress = progress.clamp(0.0, 1.0);
            }
            refresh_position(&mut s, &mut b, *pose)?;
        }
        EventPayload::NavGoalReached { label, pose } => {
            refresh_position(&mut s, &mut b, *pose)?;
            s.nav.last_arrival = Some(label.clone());
            s.nav.goal = None;
            s.nav.engaged = false;
            s.nav.command = Twist::default();
            s.robot.status = OperationalStatus::Idle;
            b.upsert(navigation_belief(OperationalStatus::Idle)?)?;
            if let Some(int) = i.as_mut() {
                if int.is_live_move() {
                    int.status = IntentionStatus::Succeeded;
                }
            }
        }
        EventPayload::Error {
            origin: ErrorOrigin::Planner,
            ..
        } => {
            s.nav.goal = None;
            s.nav.engaged = false;
            s.nav.command = Twist::default();
            s.robot.status = OperationalStatus::Error;
            b.upsert(navigation_belief(OperationalStatus::Error)?)?;
            if let Some(int) = i.as_mut() {
                if int.is_live_move() {
                    int.status = IntentionStatus::Failed;
                }
            }
        }
        EventPayload::FrameSwitch { .. }
        | EventPayload::LlmResponse { .. }
        | EventPayload::Error { .. } => {}
    }

    Ok(Applied {
        state: s,
        beliefs: b,
        intention: i,
        desires,
    })
}

/// Identity, capabilities, every known location, odometry position and navigation status.
pub fn initial_beliefs(state: &State) -> Result<BeliefBase, ModelError> {
    let mut b = BeliefBase::new();
    b.upsert(Belief::new(
        Category::Identity,
        Proposition::unary(Predicate::Identity, state.robot.identity.clone()),
        1.0,
        Source::System,
    )?)?;
    for cap in &state.robot.capabilities {
        b.upsert(Belief::new(
            Category::Capability,
            Proposition::unary(Predicate::Capability, cap.clone()),
            1.0,
            Source::System,
        )?)?;
    }
    for (label, w) in &state.env {
        b.upsert(Belief::new(
            Category::Locations,
            Proposition::located(label, w.position()),
            1.0,
            Source::Configuration,
        )?)?;
    }
    b.upsert(position_belief(state, state.nav.pose)?)?;
    b.upsert(navigation_belief(state.robot.status)?)?;
    Ok(b)
}

fn position_belief(state: &State, pose: Pose) -> Result<Belief, ModelError> {
    Belief::new(
        Category::Position,
        Proposition::at("robot", pose),
        state.robot.localization_confidence,
        Source::Odometry,
    )
}

fn navigation_belief(status: OperationalStatus) -> Result<Belief, ModelError> {
    Belief::new(
        Category::Navigation,
        Proposition::unary(Predicate::Status, status.as_str()),
        1.0,
        Source::Navigation,
    )
}

fn refresh_position(s: &mut State, b: &mut BeliefBase, pose: Pose) -> Result<(), ModelError> {
    if !pose.is_finite() {
        return Err(ModelError::MalformedEvent("non-finite pose".into()));
    }
    s.nav.pose = pose;
    b.upsert(position_belief(s, pose)?)
}

fn intent_confidence(intent: &Intent) -> f64 {
    match &intent.kind {
        IntentKind::Goto {
            target: LabelRef::Resolved { .. },
        }
        | IntentKind::Query { .. }
        | IntentKind::FreeChoice => 0.9,
        IntentKind::Smalltalk => 0.7,
        IntentKind::Goto {
            target: LabelRef::Unresolved { .. },
        }
        | IntentKind::Unknown => 0.3,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ActionParams, QueryKind, Term};
    use crate::runtime::SessionSettings;
    use crate::world::bundled_world;
    use proptest::prelude::*;

    fn started() -> (State, BeliefBase) {
        let world = bundled_world("bookstore").unwrap();
        let s = State::from_world(&world);
        let e = Event::new(
            0.0,
            EventPayload::SessionStart {
                world,
                settings: SessionSettings::default(),
            },
        );
        let a = apply_event(&s, &BeliefBase::new(), None, &e).unwrap();
        (a.state, a.beliefs)
    }

    fn goto(label: &str) -> Intent {
        Intent::new(
            IntentKind::Goto {
                target: LabelRef::Resolved {
                    label: label.into(),
                },
            },
            format!("Go to {label}."),
        )
    }

    #[test]
    fn session_start_seeds_beliefs() {
        let (s, b) = started();
        assert_eq!(
            b.location("wellness").map(|p| (p.x, p.y)),
            Some((-1.56, -1.59))
        );
        assert_eq!(b.position().unwrap().source, Source::Odometry);
        assert_eq!(b.location_labels().len(), s.env.len());
    }

    #[test]
    fn command_parsed_emits_one_user_desire() {
        let (s, b) = started();
        let e = Event::new(
            1.0,
            EventPayload::CommandParsed {
                intent: goto("cash"),
                goal: Some(Proposition::goto("cash")),
            },
        );
        let a = apply_event(&s, &b, None, &e).unwrap();
        assert_eq!(a.desires.len(), 1);
        assert_eq!(a.desires[0].origin, Origin::UserCommand);
        assert_eq!(a.desires[0].priority, 0.5);
        assert_eq!(a.desires[0].goal, Proposition::goto("cash"));
        assert_eq!(a.state.user.intent, Some(goto("cash")));
    }

    #[test]
    fn user_utterance_stores_text_without_desires() {
        let (s, b) = started();
        let e = Event::new(
            1.0,
            EventPayload::UserUtterance {
                text: "What is your position?".into(),
            },
        );
        let a = apply_event(&s, &b, None, &e).unwrap();
        assert!(a.desires.is_empty());
        assert_eq!(
            a.state.user.last_utterance.as_deref(),
            Some("What is your position?")
        );
        assert_eq!(a.beliefs, b);
    }

    #[test]
    fn tick_refreshes_position_belief() {
        let (s, b) = started();
        let pose = Pose::new(0.24, 2.27, -1.94);
        let e = Event::new(
            0.05,
            EventPayload::Tick {
                dt: 0.05,
                pose,
                odometry: pose,
                command: Twist::default(),
                progress: None,
            },
        );
        let a = apply_event(&s, &b, None, &e).unwrap();
        let belief = a.beliefs.position().unwrap();
        assert_eq!(belief.content.args[1], Term::Pose(pose));
        assert_eq!(belief.confidence, 0.95);
        assert_eq!(a.state.nav.pose, pose);
    }

    #[test]
    fn goal_reached_succeeds_move_and_idles() {
        let (s, b) = started();
        let target = Pose::new(-1.56, -1.59, 0.0);
        let intention = Intention {
            params: ActionParams::Move {
                label: "wellness".into(),
                target,
            },
            status: IntentionStatus::Pending,
            desire: "u0001".into(),
        };
        let set = Event::new(
            1.0,
            EventPayload::NavGoalSet {
                label: "wellness".into(),
                target,
            },
        );
        let a = apply_event(&s, &b, Some(&intention), &set).unwrap();
        assert_eq!(a.state.robot.status, OperationalStatus::Navigating);
        assert_eq!(
            a.intention.as_ref().unwrap().status,
            IntentionStatus::Active
        );
        assert_eq!(a.state.nav.goal.as_ref().unwrap().progress, 0.0);

        let reached = Event::new(
            9.0,
            EventPayload::NavGoalReached {
                label: "wellness".into(),
                pose: Pose::new(-1.5, -1.5, -2.0),
            },
        );
        let a = apply_event(&a.state, &a.beliefs, a.intention.as_ref(), &reached).unwrap();
        assert_eq!(a.intention.unwrap().status, IntentionStatus::Succeeded);
        assert_eq!(a.state.robot.status, OperationalStatus::Idle);
        assert!(a.state.nav.goal.is_none());
    }

    #[test]
    fn frame_switch_changes_nothing() {
        let (s, b) = started();
        let e = Event::new(
            2.0,
            EventPayload::FrameSwitch {
                frame: "mechanistic".into(),
            },
        );
        let a = apply_event(&s, &b, None, &e).unwrap();
        assert_eq!(a.beliefs, b);
        assert!(a.desires.is_empty());
        let mut expected = s.clone();
        expected.clock = 2.0;
        assert_eq!(a.state, expected);
    }

    #[test]
    fn time_regression_is_rejected() {
        let (s, b) = started();
        let later = Event::new(5.0, EventPayload::UserUtterance { text: "hi".into() });
        let a = apply_event(&s, &b, None, &later).unwrap();
        let earlier = Event::new(4.0, EventPayload::UserUtterance { text: "hi".into() });
        assert!(matches!(
            apply_event(&a.state, &a.beliefs, None, &earlier),
            Err(ModelError::TimeRegression { .. })
        ));
    }

    fn arb_event() -> impl Strategy<Value = (f64, EventPayload)> {
        let pose =
            (-5.0f64..5.0, -5.0f64..5.0, -3.0f64..3.0).prop_map(|(x, y, t)| Pose::new(x, y, t));
        prop_oneof![
            (0.0f64..2.0, pose.clone()).prop_map(|(dt, p)| (
                dt,
                EventPayload::Tick {
                    dt: 0.05,
                    pose: p,
                    odometry: p,
                    command: Twist::default(),
                    progress: Some(0.5)
                }
            )),
            (
                0.0f64..2.0,
                prop::sample::select(vec!["cash", "wellness", "fantasy"])
            )
                .prop_map(|(dt, l)| (
                    dt,
                    EventPayload::CommandParsed {
                        intent: goto(l),
                        goal: Some(Proposition::goto(l))
                    }
                )),
            (0.0f64..2.0).prop_map(|dt| (
                dt,
                EventPayload::CommandParsed {
                    intent: Intent::new(
                        IntentKind::Query {
                            about: QueryKind::Position
                        },
                        "where?"
                    ),
                    goal: Some(Proposition::respond("position_report")),
                }
            )),
            (0.0f64..2.0, pose.clone()).prop_map(|(dt, p)| (
                dt,
                EventPayload::NavGoalSet {
                    label: "cash".into(),
                    target: p
                }
            )),
            (0.0f64..2.0, pose).prop_map(|(dt, p)| (
                dt,
                EventPayload::NavGoalReached {
                    label: "cash".into(),
                    pose: p
                }
            )),
            (0.0f64..2.0).prop_map(|dt| (
                dt,
                EventPayload::FrameSwitch {
                    frame: "teleological".into()
                }
            )),
        ]
    }

    proptest! {
        #[test]
        fn replaying_events_is_deterministic(events in prop::collection::vec(arb_event(), 0..30)) {
            let (s0, b0) = started();
            let run = || {
                let (mut s, mut b, mut i) = (s0.clone(), b0.clone(), None::<Intention>);
                let mut t = 0.0;
                for (dt, payload) in &events {
                    t += dt;
                    let a = apply_event(&s, &b, i.as_ref(), &Event::new(t, payload.clone())).unwrap();
                    for bel in a.beliefs.iter() {
                        assert!(bel.validate().is_ok());
                    }
                    s = a.state;
                    b = a.beliefs;
                    i = a.intention;
                }
                (s, b)
            };
            prop_assert_eq!(run(), run());
        }
    }
}
