//! A live session: feeds external inputs through the model, policy,
//! simulator and renderer, and records every transition.

mod session;
mod settings;

pub use session::{Reply, Runtime, RuntimeError, TickOutcome, TurnStep};
pub use settings::SessionSettings;
