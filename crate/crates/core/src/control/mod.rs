//! Joint control: PID loops, cubic joint trajectories, a first-order
//! actuator model and the pick-and-place phase machine.

mod phase;
mod pid;
mod trajectory;

pub use phase::{pick_place_advance, PickPlacePhase};
pub use pid::{pid_step, Pid, PidGains, PidState};
pub use trajectory::{plan_trajectory, CubicCoefficients, JointTrajectory, MIN_DURATION};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{JointAngles, JointLimit};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("time step must be positive, got {0}")]
    NonPositiveDt(f64),
    #[error("invalid gains: {0}")]
    InvalidGains(String),
    #[error("invalid control setting: {0}")]
    InvalidSetting(String),
}

impl ControlError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::NonPositiveDt(_) => "NonPositiveDt",
            Self::InvalidGains(_) => "InvalidGains",
            Self::InvalidSetting(_) => "InvalidSetting",
        }
    }
}

/// Settings of the `[arm_control]` scenario section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArmControlConfig {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub output_limit: f64,
    pub integral_limit: f64,
    /// Control period, seconds.
    pub dt: f64,
    /// Planner speed bound, rad/s.
    pub max_joint_speed: f64,
    /// Hard actuator rate limit, rad/s.
    pub actuator_speed_limit: f64,
    /// Suction attaches only within this distance of the object center, m.
    pub grasp_tolerance: f64,
    /// Joints count as settled within this max-norm error, rad.
    pub at_target_tolerance: f64,
    /// Time allowed past a segment's duration to settle, seconds.
    pub settle_timeout: f64,
    /// Clearance of approach and transit waypoints above the grasp point, m.
    pub hover_height: f64,
    /// Dwell before the suction releases, seconds.
    pub release_dwell: f64,
}

impl Default for ArmControlConfig {
    fn default() -> Self {
        let g = PidGains::default();
        Self {
            kp: g.kp,
            ki: g.ki,
            kd: g.kd,
            output_limit: g.output_limit,
            integral_limit: g.integral_limit,
            dt: 0.01,
            max_joint_speed: 1.0,
            actuator_speed_limit: 3.0,
            grasp_tolerance: 0.005,
            at_target_tolerance: 1e-3,
            settle_timeout: 2.0,
            hover_height: 0.06,
            release_dwell: 0.2,
        }
    }
}

impl ArmControlConfig {
    pub fn gains(&self) -> PidGains {
        PidGains {
            kp: self.kp,
            ki: self.ki,
            kd: self.kd,
            output_limit: self.output_limit,
            integral_limit: self.integral_limit,
        }
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        self.gains().validate()?;
        if !(self.dt > 0.0) {
            return Err(ControlError::NonPositiveDt(self.dt));
        }
        let positive = [
            ("max_joint_speed", self.max_joint_speed),
            ("actuator_speed_limit", self.actuator_speed_limit),
            ("grasp_tolerance", self.grasp_tolerance),
            ("at_target_tolerance", self.at_target_tolerance),
            ("settle_timeout", self.settle_timeout),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ControlError::InvalidSetting(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("hover_height", self.hover_height), ("release_dwell", self.release_dwell)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(ControlError::InvalidSetting(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

/// First-order plant: integrates rate-limited velocity commands and clamps
/// the result to the joint limits.
pub fn actuator_step(
    state: &JointAngles,
    command: &[f64; 3],
    dt: f64,
    speed_limit: f64,
    limits: &[JointLimit; 3],
) -> Result<JointAngles, ControlError> {
    if !(dt > 0.0) {
        return Err(ControlError::NonPositiveDt(dt));
    }
    let q = state.as_array();
    let mut next = [0.0; 3];
    for i in 0..3 {
        let rate = command[i].clamp(-speed_limit, speed_limit);
        next[i] = limits[i].clamp(q[i] + rate * dt);
    }
    Ok(JointAngles::from_array(next))
}

/// Per-joint trajectory tracking: discrete velocity feedforward plus PID on
/// the position error.
///
/// The feedforward term `(ref(t + dt) − ref(t)) / dt` makes the plant follow
/// the sampled reference exactly once the error is zero; the PID removes any
/// initial offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointTracker {
    pub pids: [Pid; 3],
}

impl JointTracker {
    pub fn new(gains: PidGains) -> Self {
        Self {
            pids: [Pid::new(gains); 3],
        }
    }

    pub fn reset(&mut self) {
        self.pids.iter_mut().for_each(Pid::reset);
    }

    /// Velocity command for the tick starting at trajectory time `t`.
    pub fn command(
        &mut self,
        trajectory: &JointTrajectory,
        t: f64,
        current: &JointAngles,
        dt: f64,
    ) -> Result<[f64; 3], ControlError> {
        let now = trajectory.position(t).as_array();
        let next = trajectory.position(t + dt).as_array();
        let q = current.as_array();
        let mut out = [0.0; 3];
        for i in 0..3 {
            let feedforward = (next[i] - now[i]) / dt;
            out[i] = feedforward + self.pids[i].step(now[i] - q[i], dt)?;
        }
        Ok(out)
    }
}
