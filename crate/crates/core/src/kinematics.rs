//! Closed-form kinematics of a 3-DoF yaw/shoulder/elbow arm.
//!
//! The base yaws about world +z at the origin; the shoulder sits at height
//! `l1` and the two links `l2`, `l3` move in the vertical plane selected by
//! the yaw. `theta2` is the shoulder elevation above horizontal and `theta3`
//! the elbow bend relative to the extension of link 2, both positive up.
//!
//! ```text
//! r = l2 cos θ2 + l3 cos(θ2 + θ3)      x = r cos θ1
//! s = l2 sin θ2 + l3 sin(θ2 + θ3)      y = r sin θ1
//!                                      z = l1 + s
//! ```
//!
//! Inverse kinematics takes `θ1 = atan2(y, x)`, reduces the target to the
//! planar pair `(r, s)` with `d = √(r² + s²)`, and applies the law of
//! cosines for the interior elbow angle `γ`. The two elbow branches are
//! `θ3 = ±(π − γ)`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::WorldPoint;

/// Slack on joint limits and on the law-of-cosines argument.
const LIMIT_EPS: f64 = 1e-9;
const ACOS_CLAMP_EPS: f64 = 1e-12;
const BOUNDARY_EPS: f64 = 1e-12;
/// Branches closer than this (max-norm, radians) are reported once.
const DEDUP_EPS: f64 = 1e-9;
const YAW_SINGULAR_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("invalid arm geometry: {0}")]
    InvalidGeometry(String),
    #[error("target at planar distance {distance:.6} m is outside the workspace [{inner:.6}, {outer:.6}]")]
    Unreachable {
        distance: f64,
        inner: f64,
        outer: f64,
    },
    #[error("{branch:?} solution violates the limit of joint {joint}: {angle:.6} rad not in [{min:.6}, {max:.6}]")]
    JointLimitViolation {
        branch: ElbowBranch,
        joint: usize,
        angle: f64,
        min: f64,
        max: f64,
    },
    #[error("target lies on the base axis; yaw is undefined without a current pose")]
    YawSingularity,
    #[error("no candidate solutions")]
    EmptyCandidates,
}

impl KinematicsError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::InvalidGeometry(_) => "InvalidGeometry",
            Self::Unreachable { .. } => "Unreachable",
            Self::JointLimitViolation { .. } => "JointLimitViolation",
            Self::YawSingularity => "YawSingularity",
            Self::EmptyCandidates => "EmptyCandidates",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointLimit {
    pub min: f64,
    pub max: f64,
}

impl JointLimit {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, angle: f64) -> bool {
        angle >= self.min - LIMIT_EPS && angle <= self.max + LIMIT_EPS
    }

    pub fn clamp(&self, angle: f64) -> f64 {
        angle.clamp(self.min, self.max)
    }
}

/// Default limits: yaw over the full circle, shoulder and elbow in [−π/2, π].
pub const DEFAULT_LIMITS: [JointLimit; 3] = [
    JointLimit::new(-PI, PI),
    JointLimit::new(-FRAC_PI_2, PI),
    JointLimit::new(-FRAC_PI_2, PI),
];

/// The widest admissible limits, [−π, π] on every joint.
pub const WIDE_LIMITS: [JointLimit; 3] = [
    JointLimit::new(-PI, PI),
    JointLimit::new(-PI, PI),
    JointLimit::new(-PI, PI),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmGeometry {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub joint_limits: [JointLimit; 3],
    /// Length of a vertical tool (suction cup) hanging below the end of
    /// link 3. The reported end-effector is the tool tip.
    #[serde(default)]
    pub tool_offset: f64,
}

impl ArmGeometry {
    pub fn new(l1: f64, l2: f64, l3: f64) -> Result<Self, KinematicsError> {
        Self::with_limits(l1, l2, l3, DEFAULT_LIMITS)
    }

    pub fn with_limits(
        l1: f64,
        l2: f64,
        l3: f64,
        joint_limits: [JointLimit; 3],
    ) -> Result<Self, KinematicsError> {
        let g = Self {
            l1,
            l2,
            l3,
            joint_limits,
            tool_offset: 0.0,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn with_tool_offset(mut self, offset: f64) -> Result<Self, KinematicsError> {
        self.tool_offset = offset;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        for (name, l) in [("l1", self.l1), ("l2", self.l2), ("l3", self.l3)] {
            if !(l > 0.0) || !l.is_finite() {
                return Err(KinematicsError::InvalidGeometry(format!(
                    "{name} must be positive, got {l}"
                )));
            }
        }
        if !(self.tool_offset >= 0.0) || !self.tool_offset.is_finite() {
            return Err(KinematicsError::InvalidGeometry(format!(
                "tool offset must be non-negative, got {}",
                self.tool_offset
            )));
        }
        let envelope = [(-PI, PI), (-FRAC_PI_2, PI), (-FRAC_PI_2, PI)];
        for (i, (lim, env)) in self.joint_limits.iter().zip(envelope).enumerate() {
            // the yaw envelope is fixed, shoulder and elbow may widen to [-π, π]
            let lower = if i == 0 { env.0 } else { -PI };
            if !(lim.min <= lim.max) || lim.min < lower - LIMIT_EPS || lim.max > env.1 + LIMIT_EPS {
                return Err(KinematicsError::InvalidGeometry(format!(
                    "joint {} limits [{}, {}] invalid",
                    i + 1,
                    lim.min,
                    lim.max
                )));
            }
        }
        Ok(())
    }

    /// Workspace shell `[|l2 − l3|, l2 + l3]` for the planar distance.
    pub fn reach_bounds(&self) -> (f64, f64) {
        ((self.l2 - self.l3).abs(), self.l2 + self.l3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JointAngles {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
}

impl JointAngles {
    pub const fn new(theta1: f64, theta2: f64, theta3: f64) -> Self {
        Self {
            theta1,
            theta2,
            theta3,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.theta1, self.theta2, self.theta3]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    /// Largest per-joint absolute difference.
    pub fn max_distance(&self, other: &JointAngles) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn within(&self, limits: &[JointLimit; 3]) -> bool {
        self.as_array()
            .iter()
            .zip(limits)
            .all(|(a, l)| l.contains(*a))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ElbowBranch {
    /// θ3 ≥ 0
    ElbowA,
    /// θ3 ≤ 0
    ElbowB,
}

impl ElbowBranch {
    pub const BOTH: [ElbowBranch; 2] = [ElbowBranch::ElbowA, ElbowBranch::ElbowB];

    fn sign(self) -> f64 {
        match self {
            ElbowBranch::ElbowA => 1.0,
            ElbowBranch::ElbowB => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarTarget {
    /// Horizontal distance from the base axis.
    pub r: f64,
    /// Height above the shoulder.
    pub s: f64,
    /// Shoulder-to-target distance.
    pub d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IkSolution {
    pub branch: ElbowBranch,
    pub joints: JointAngles,
}

/// Wraps an angle into (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

pub fn forward_kinematics(g: &ArmGeometry, q: &JointAngles) -> WorldPoint {
    let elbow = q.theta2 + q.theta3;
    let r = g.l2 * q.theta2.cos() + g.l3 * elbow.cos();
    let s = g.l2 * q.theta2.sin() + g.l3 * elbow.sin();
    WorldPoint::new(r * q.theta1.cos(), r * q.theta1.sin(), g.l1 + s - g.tool_offset)
}

/// Position of the elbow joint, for display.
pub fn elbow_position(g: &ArmGeometry, q: &JointAngles) -> WorldPoint {
    let r = g.l2 * q.theta2.cos();
    WorldPoint::new(r * q.theta1.cos(), r * q.theta1.sin(), g.l1 + g.l2 * q.theta2.sin())
}

pub fn planar_reduce(g: &ArmGeometry, target: &WorldPoint) -> PlanarTarget {
    let r = target.x.hypot(target.y);
    let s = target.z + g.tool_offset - g.l1;
    PlanarTarget { r, s, d: r.hypot(s) }
}

/// Workspace membership ignoring joint limits.
pub fn is_reachable(g: &ArmGeometry, target: &WorldPoint) -> bool {
    let (inner, outer) = g.reach_bounds();
    let tol = BOUNDARY_EPS * outer.max(1.0);
    let d = planar_reduce(g, target).d;
    d >= inner - tol && d <= outer + tol
}

/// Interior elbow angle γ from the law of cosines.
///
/// Targets within `BOUNDARY_EPS` of either workspace shell snap to the
/// straight (γ = π) or folded (γ = 0) elbow: `acos` has infinite slope there,
/// while the position error of the snap is second order.
fn interior_elbow_angle(g: &ArmGeometry, p: &PlanarTarget) -> Result<f64, KinematicsError> {
    let (inner, outer) = g.reach_bounds();
    let tol = BOUNDARY_EPS * outer.max(1.0);
    if (p.d - outer).abs() <= tol {
        return Ok(PI);
    }
    if (p.d - inner).abs() <= tol {
        return Ok(0.0);
    }
    let cos_gamma = (g.l2 * g.l2 + g.l3 * g.l3 - p.d * p.d) / (2.0 * g.l2 * g.l3);
    if !cos_gamma.is_finite() || cos_gamma.abs() > 1.0 + ACOS_CLAMP_EPS {
        return Err(KinematicsError::Unreachable {
            distance: p.d,
            inner,
            outer,
        });
    }
    Ok(cos_gamma.clamp(-1.0, 1.0).acos())
}

fn solve_branch(
    g: &ArmGeometry,
    target: &WorldPoint,
    branch: ElbowBranch,
    yaw_hint: Option<f64>,
) -> Result<JointAngles, KinematicsError> {
    let p = planar_reduce(g, target);
    let gamma = interior_elbow_angle(g, &p)?;
    let theta1 = if p.r < YAW_SINGULAR_EPS {
        yaw_hint.ok_or(KinematicsError::YawSingularity)?
    } else {
        target.y.atan2(target.x)
    };
    let theta3 = branch.sign() * (PI - gamma);
    let theta2 = wrap_angle(
        p.s.atan2(p.r) - (g.l3 * theta3.sin()).atan2(g.l2 + g.l3 * theta3.cos()),
    );
    let q = JointAngles::new(theta1, theta2, theta3);
    for (i, (angle, lim)) in q.as_array().iter().zip(&g.joint_limits).enumerate() {
        if !lim.contains(*angle) {
            return Err(KinematicsError::JointLimitViolation {
                branch,
                joint: i + 1,
                angle: *angle,
                min: lim.min,
                max: lim.max,
            });
        }
    }
    Ok(q)
}

/// Closed-form IK for one elbow branch.
pub fn inverse_kinematics(
    g: &ArmGeometry,
    target: &WorldPoint,
    branch: ElbowBranch,
) -> Result<JointAngles, KinematicsError> {
    solve_branch(g, target, branch, None)
}

/// As [`inverse_kinematics`], keeping the current yaw when the target lies
/// on the base axis.
pub fn inverse_kinematics_near(
    g: &ArmGeometry,
    target: &WorldPoint,
    branch: ElbowBranch,
    current: &JointAngles,
) -> Result<JointAngles, KinematicsError> {
    solve_branch(g, target, branch, Some(current.theta1))
}

/// Every limit-feasible branch, ElbowA first. Coinciding branches (at the
/// workspace boundary) are reported once. On the base axis the yaw falls
/// back to zero.
pub fn ik_all_solutions(g: &ArmGeometry, target: &WorldPoint) -> Vec<IkSolution> {
    collect_solutions(g, target, 0.0)
}

/// As [`ik_all_solutions`], keeping the current yaw on the base axis.
pub fn ik_all_solutions_near(
    g: &ArmGeometry,
    target: &WorldPoint,
    current: &JointAngles,
) -> Vec<IkSolution> {
    collect_solutions(g, target, current.theta1)
}

fn collect_solutions(g: &ArmGeometry, target: &WorldPoint, yaw_hint: f64) -> Vec<IkSolution> {
    let mut out: Vec<IkSolution> = Vec::with_capacity(2);
    for branch in ElbowBranch::BOTH {
        if let Ok(joints) = solve_branch(g, target, branch, Some(yaw_hint)) {
            if out
                .iter()
                .all(|s| s.joints.max_distance(&joints) >= DEDUP_EPS)
            {
                out.push(IkSolution { branch, joints });
            }
        }
    }
    out
}

/// Picks the candidate closest to `current` in max-norm; ties go to ElbowA,
/// then to the earlier candidate.
pub fn select_solution(
    candidates: &[IkSolution],
    current: &JointAngles,
) -> Result<IkSolution, KinematicsError> {
    candidates
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| {
            let da = a.joints.max_distance(current);
            let db = b.joints.max_distance(current);
            da.total_cmp(&db)
                .then(a.branch.cmp(&b.branch))
                .then(i.cmp(j))
        })
        .map(|(_, s)| *s)
        .ok_or(KinematicsError::EmptyCandidates)
}
