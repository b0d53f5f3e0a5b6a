use serde::{Deserialize, Serialize};

use super::{NavPlan, SimError};
use crate::geometry::{normalize_angle, Pose};
use crate::model::Twist;

pub const DEFAULT_DT: f64 = 0.05;
pub const DEFAULT_V_MAX: f64 = 0.26;
pub const DEFAULT_OMEGA_MAX: f64 = 1.82;

/// Heading error above which the robot turns in place before driving.
pub const ROTATE_IN_PLACE: f64 = 0.35;
/// Radius within which an intermediate path point counts as passed.
pub const WAYPOINT_SWITCH: f64 = 0.05;
const HEADING_GAIN: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub v_max: f64,
    pub omega_max: f64,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            v_max: DEFAULT_V_MAX,
            omega_max: DEFAULT_OMEGA_MAX,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicState {
    pub pose: Pose,
    pub v: f64,
    pub omega: f64,
}

impl KinematicState {
    pub fn at_rest(pose: Pose) -> Self {
        Self {
            pose,
            v: 0.0,
            omega: 0.0,
        }
    }

    pub fn twist(&self) -> Twist {
        Twist {
            linear: self.v,
            angular: self.omega,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: KinematicState,
    pub progress: f64,
    pub reached: bool,
}

fn within_goal(pose: &Pose, plan: &NavPlan) -> bool {
    pose.distance_to(plan.goal.position()) <= plan.arrival_tolerance
}

/// Velocity command for the current pose; advances past intermediate points
/// already within [`WAYPOINT_SWITCH`].
pub fn command(pose: &Pose, plan: &mut NavPlan, limits: &Limits) -> Twist {
    if within_goal(pose, plan) {
        return Twist::default();
    }
    while !plan.is_final_segment() && pose.distance_to(plan.current_target()) <= WAYPOINT_SWITCH {
        plan.advance_cursor();
    }
    let target = plan.current_target();
    let bearing = (target.y - pose.y).atan2(target.x - pose.x);
    let error = normalize_angle(bearing - pose.theta);
    let omega = (HEADING_GAIN * error).clamp(-limits.omega_max, limits.omega_max);
    let linear = if error.abs() > ROTATE_IN_PLACE {
        0.0
    } else {
        limits.v_max * error.cos()
    };
    Twist {
        linear,
        angular: omega,
    }
}

/// One control period: command, Euler-integrate, then test arrival.
pub fn step(
    k: &KinematicState,
    plan: &mut NavPlan,
    limits: &Limits,
    dt: f64,
) -> Result<StepOutcome, SimError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(SimError::InvalidTimestep(dt));
    }
    if within_goal(&k.pose, plan) {
        return Ok(StepOutcome {
            state: KinematicState::at_rest(k.pose),
            progress: plan.complete(),
            reached: true,
        });
    }
    let cmd = command(&k.pose, plan, limits);
    let p = k.pose;
    let pose = Pose::new(
        p.x + cmd.linear * p.theta.cos() * dt,
        p.y + cmd.linear * p.theta.sin() * dt,
        p.theta + cmd.angular * dt,
    );
    if within_goal(&pose, plan) {
        return Ok(StepOutcome {
            state: KinematicState::at_rest(pose),
            progress: plan.complete(),
            reached: true,
        });
    }
    Ok(StepOutcome {
        state: KinematicState {
            pose,
            v: cmd.linear,
            omega: cmd.angular,
        },
        progress: plan.record_progress(pose.position()),
        reached: false,
    })
}
