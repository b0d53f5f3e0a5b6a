//! Utterance parsing and action selection.

mod decide;
mod parse;

pub use decide::{decide, free_choice, ActionDecision, DecisionTrigger, Engine, RationaleTag};
pub use parse::parse_command;
