use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Intent;
use crate::geometry::Pose;
use crate::world::{Waypoint, WorldSpec};

pub const ROBOT_IDENTITY: &str = "rover";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperationalStatus {
    Idle,
    Navigating,
    Error,
}

impl OperationalStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            OperationalStatus::Idle => "idle",
            OperationalStatus::Navigating => "navigating",
            OperationalStatus::Error => "error",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Twist {
    pub linear: f64,
    pub angular: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotSelf {
    pub identity: String,
    pub capabilities: Vec<String>,
    pub status: OperationalStatus,
    /// Confidence attached to odometry-derived position beliefs.
    pub localization_confidence: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UserModel {
    pub last_utterance: Option<String>,
    pub intent: Option<Intent>,
    pub last_answered: Option<String>,
    /// Number of parsed commands so far; seeds desire ids.
    pub commands: u64,
}

/// Active navigation goal. Progress only exists alongside a goal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavGoal {
    pub label: String,
    pub target: Pose,
    pub progress: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavState {
    pub pose: Pose,
    pub goal: Option<NavGoal>,
    pub engaged: bool,
    pub command: Twist,
    pub arrival_tolerance: f64,
    /// Label of the most recently reached goal.
    pub last_arrival: Option<String>,
}

/// `S = S_env × S_robot × S_user × S_nav`, plus the time of the last applied event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub clock: f64,
    pub env: BTreeMap<String, Waypoint>,
    pub robot: RobotSelf,
    pub user: UserModel,
    pub nav: NavState,
}

impl State {
    pub fn from_world(world: &WorldSpec) -> Self {
        Self {
            clock: 0.0,
            env: world
                .waypoints
                .iter()
                .map(|w| (w.label.clone(), w.clone()))
                .collect(),
            robot: RobotSelf {
                identity: ROBOT_IDENTITY.to_string(),
                capabilities: vec!["move".to_string(), "chat".to_string()],
                status: OperationalStatus::Idle,
                localization_confidence: world.defaults.position_confidence,
            },
            user: UserModel::default(),
            nav: NavState {
                pose: world.spawn,
                goal: None,
                engaged: false,
                command: Twist::default(),
                arrival_tolerance: world.defaults.arrival_tolerance,
                last_arrival: None,
            },
        }
    }
}
