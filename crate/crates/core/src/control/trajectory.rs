use serde::{Deserialize, Serialize};

use crate::kinematics::JointAngles;

/// Shortest trajectory the planner will emit, seconds.
pub const MIN_DURATION: f64 = 0.1;
/// Peak-to-average velocity ratio of a rest-to-rest cubic.
const CUBIC_PEAK_RATIO: f64 = 1.5;

/// Coefficients of `θ(t) = c0 + c2·t² + c3·t³` (the linear term vanishes
/// because the motion starts at rest).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicCoefficients {
    pub c0: f64,
    pub c2: f64,
    pub c3: f64,
}

impl CubicCoefficients {
    fn rest_to_rest(start: f64, end: f64, duration: f64) -> Self {
        let delta = end - start;
        Self {
            c0: start,
            c2: 3.0 * delta / (duration * duration),
            c3: -2.0 * delta / (duration * duration * duration),
        }
    }

    pub fn position(&self, t: f64) -> f64 {
        self.c0 + t * t * (self.c2 + self.c3 * t)
    }

    pub fn velocity(&self, t: f64) -> f64 {
        t * (2.0 * self.c2 + 3.0 * self.c3 * t)
    }
}

/// Rest-to-rest joint-space motion, one cubic per joint sharing a duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointTrajectory {
    pub start: JointAngles,
    pub end: JointAngles,
    pub duration: f64,
    pub coefficients: [CubicCoefficients; 3],
}

impl JointTrajectory {
    /// Reference position; holds `start` before 0 and `end` after `duration`.
    pub fn position(&self, t: f64) -> JointAngles {
        if t <= 0.0 {
            return self.start;
        }
        if t >= self.duration {
            return self.end;
        }
        JointAngles::from_array(self.coefficients.map(|c| c.position(t)))
    }

    pub fn velocity(&self, t: f64) -> [f64; 3] {
        if t <= 0.0 || t >= self.duration {
            return [0.0; 3];
        }
        self.coefficients.map(|c| c.velocity(t))
    }
}

/// Plans a cubic whose per-joint peak speed stays within `max_joint_speed`.
///
/// The duration is `1.5·max|Δθ| / max_joint_speed`, floored at
/// [`MIN_DURATION`]. Panics if `max_joint_speed` is not positive.
pub fn plan_trajectory(from: &JointAngles, to: &JointAngles, max_joint_speed: f64) -> JointTrajectory {
    assert!(max_joint_speed > 0.0, "max_joint_speed must be positive");
    let largest = from.max_distance(to);
    let duration = (CUBIC_PEAK_RATIO * largest / max_joint_speed).max(MIN_DURATION);
    let s = from.as_array();
    let e = to.as_array();
    JointTrajectory {
        start: *from,
        end: *to,
        duration,
        coefficients: [0, 1, 2].map(|i| CubicCoefficients::rest_to_rest(s[i], e[i], duration)),
    }
}
