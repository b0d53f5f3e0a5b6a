//! Formal objects of the agent: state, propositions, beliefs, desires,
//! intentions and events, plus the pure update rules over them.

mod bdi;
mod event;
mod intent;
mod proposition;
mod state;
mod transition;

use thiserror::Error;

pub use bdi::{
    promote, upsert_belief, ActionKind, ActionParams, Belief, BeliefBase, BeliefKey, Category,
    Desire, Intention, IntentionStatus, Origin, Source, Topic, INTERNAL_PRIORITY, USER_ADDRESSEE,
    USER_COMMAND_PRIORITY,
};
pub use event::{ErrorOrigin, Event, EventKind, EventPayload};
pub use intent::{Intent, IntentKind, LabelRef, QueryKind};
pub use proposition::{holds, Predicate, Proposition, Term, POSITION_TOLERANCE};
pub use state::{
    NavGoal, NavState, OperationalStatus, RobotSelf, State, Twist, UserModel, ROBOT_IDENTITY,
};
pub use transition::{apply_event, initial_beliefs, Applied};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("unregistered predicate `{0}`")]
    UnknownPredicate(String),
    #[error("predicate `{predicate}` takes {expected} arguments, got {found}")]
    Arity {
        predicate: String,
        expected: String,
        found: usize,
    },
    #[error("argument {index} of `{predicate}` must be a {expected}")]
    BadArgument {
        predicate: String,
        index: usize,
        expected: String,
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("event at t={got} precedes the last applied event at t={last}")]
    TimeRegression { last: f64, got: f64 },
    #[error("malformed event: {0}")]
    MalformedEvent(String),
}
