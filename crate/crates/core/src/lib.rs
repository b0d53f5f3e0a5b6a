//! Core of a self-explaining simulated mobile robot: a belief–desire–intention
//! model, a differential-drive simulator with grid planning, a rules or
//! language-model policy, frame-specific explanation rendering, and an
//! event-sourced session log with replay and stimulus export.

pub mod frames;
pub mod geometry;
pub mod llm;
pub mod log;
pub mod model;
pub mod policy;
pub mod runtime;
pub mod script;
pub mod sim;
pub mod world;
