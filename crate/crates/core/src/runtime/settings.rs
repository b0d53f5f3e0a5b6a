use serde::{Deserialize, Serialize};

use crate::frames::Frame;
use crate::policy::Engine;
use crate::sim::{Limits, DEFAULT_DT, PLANNING_MARGIN};
use crate::world::DEFAULT_ROBOT_RADIUS;

/// Everything besides the world that determines a session's behavior.
/// Stored in the `session_start` event so logs are self-contained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionSettings {
    pub engine: Engine,
    pub seed: u64,
    /// Frame at session start.
    pub frame: Frame,
    pub dt: f64,
    pub robot_radius: f64,
    pub planning_margin: f64,
    pub limits: Limits,
    /// Seeded Gaussian noise on odometry readings.
    pub odometry_noise: bool,
    /// Ask the language model to rephrase replies (checked against the lexicon).
    pub phrasing: bool,
}

impl Default for SessionSettings {
    fn default() -> Self {
        Self {
            engine: Engine::Rules,
            seed: 0,
            frame: Frame::Agentive,
            dt: DEFAULT_DT,
            robot_radius: DEFAULT_ROBOT_RADIUS,
            planning_margin: PLANNING_MARGIN,
            limits: Limits::default(),
            odometry_noise: false,
            phrasing: false,
        }
    }
}

impl SessionSettings {
    /// Whether any turn may need a model completion.
    pub fn uses_llm(&self) -> bool {
        self.engine == Engine::Llm || self.phrasing
    }

    /// Ticks per simulated second (rounded).
    pub fn ticks_per_second(&self) -> u64 {
        ((1.0 / self.dt).round() as u64).max(1)
    }
}
