//! Discrete-time differential-drive simulation and navigation.

mod control;
mod odometry;
mod planner;

use thiserror::Error;

pub use control::{
    command, step, KinematicState, Limits, StepOutcome, DEFAULT_DT, DEFAULT_OMEGA_MAX,
    DEFAULT_V_MAX, ROTATE_IN_PLACE, WAYPOINT_SWITCH,
};
pub use odometry::{odometry, tick_seed, SIGMA_THETA, SIGMA_XY};
pub use planner::{
    astar, neighbors, plan, NavPlan, PlanError, DEFAULT_ARRIVAL_TOLERANCE, NEIGHBORS,
};

/// Extra clearance added to the robot radius when inflating obstacles for planning.
pub const PLANNING_MARGIN: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("time step must be positive and finite, got {0}")]
    InvalidTimestep(f64),
}
