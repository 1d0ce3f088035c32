//! Deterministic world model: a tabletop scene of spherical objects, a fixed
//! camera with an oracle detector, and the 3R arm executing pick-and-place
//! cycles under PID tracking.

mod engine;
mod scenario;

pub use engine::{ArmSnapshot, SceneSnapshot, SimConfig, Simulator, TaskOutcome};
pub use scenario::{
    parse_scenario, run_scenario, CommandOutcome, OutcomeStatus, Scenario, ScenarioError,
    ScenarioReport, DEMO_SCENARIO,
};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::command::ActionRequest;
use crate::control::{ControlError, PickPlacePhase};
use crate::detection::{
    box_center, BoundingBox, ClassList, Detection, DEFAULT_CONFIDENCE_THRESHOLD, DEFAULT_NMS_IOU,
};
use crate::geometry::{CameraModel, GeometryError, PixelPoint, WorldPoint};
use crate::kinematics::KinematicsError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error("object {0} is behind the camera")]
    ObjectBehindCamera(u32),
    #[error("no {0} detected")]
    ClassNotDetected(String),
    #[error("nothing graspable within {tolerance} m of the end effector (nearest {distance} m)")]
    GraspFailed { distance: f64, tolerance: f64 },
    #[error("{phase:?} did not settle within the timeout")]
    SettleTimeout { phase: PickPlacePhase },
    #[error("unknown drop zone {0:?}")]
    UnknownDropZone(String),
    #[error("scene has no drop zone")]
    NoDropZone,
    #[error("arm is busy")]
    ArmBusy,
    #[error("command exceeded the {0} s time budget")]
    Timeout(f64),
    #[error("invalid action: {0}")]
    InvalidAction(String),
}

impl SimError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Geometry(e) => e.name(),
            Self::Kinematics(e) => e.name(),
            Self::Control(e) => e.name(),
            Self::ObjectBehindCamera(_) => "ObjectBehindCamera",
            Self::ClassNotDetected(_) => "ClassNotDetected",
            Self::GraspFailed { .. } => "GraspFailed",
            Self::SettleTimeout { .. } => "SettleTimeout",
            Self::UnknownDropZone(_) => "UnknownDropZone",
            Self::NoDropZone => "NoDropZone",
            Self::ArmBusy => "ArmBusy",
            Self::Timeout(_) => "Timeout",
            Self::InvalidAction(_) => "InvalidAction",
        }
    }

    /// Pipeline stage the error belongs to, as reported in Error events.
    pub fn stage(&self) -> &'static str {
        match self {
            Self::Geometry(_) => "geometry",
            Self::Kinematics(_) => "kinematics",
            Self::ObjectBehindCamera(_) | Self::ClassNotDetected(_) => "detection",
            Self::Control(_) | Self::GraspFailed { .. } | Self::SettleTimeout { .. } | Self::Timeout(_) => {
                "control"
            }
            Self::UnknownDropZone(_) | Self::NoDropZone | Self::ArmBusy | Self::InvalidAction(_) => {
                "command"
            }
        }
    }
}

/// A graspable sphere resting on the workbench.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: u32,
    pub class: String,
    /// Sphere center; `z` is the plane height plus the radius.
    pub position: WorldPoint,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropZone {
    pub name: String,
    pub position: WorldPoint,
}

/// Axis-aligned workbench bounds in the world x-y plane, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extent {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl Default for Extent {
    fn default() -> Self {
        Self {
            x: [-1.0, 1.0],
            y: [-1.0, 1.0],
        }
    }
}

impl Extent {
    pub fn contains(&self, p: &WorldPoint) -> bool {
        (self.x[0]..=self.x[1]).contains(&p.x) && (self.y[0]..=self.y[1]).contains(&p.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub objects: Vec<SceneObject>,
    pub plane_height: f64,
    pub drop_zones: Vec<DropZone>,
    pub extent: Extent,
}

impl Scene {
    pub fn new(plane_height: f64, extent: Extent) -> Self {
        Self {
            objects: Vec::new(),
            plane_height,
            drop_zones: Vec::new(),
            extent,
        }
    }

    /// Adds a sphere resting on the plane at `(x, y)` and returns its id.
    pub fn add_object(&mut self, class: &str, x: f64, y: f64, radius: f64) -> u32 {
        let id = self.objects.iter().map(|o| o.id).max().map_or(1, |m| m + 1);
        self.objects.push(SceneObject {
            id,
            class: class.to_string(),
            position: WorldPoint::new(x, y, self.plane_height + radius),
            radius,
        });
        id
    }

    pub fn add_drop_zone(&mut self, name: &str, x: f64, y: f64) {
        self.drop_zones.push(DropZone {
            name: name.to_string(),
            position: WorldPoint::new(x, y, self.plane_height),
        });
    }

    pub fn drop_zone(&self, name: &str) -> Option<&DropZone> {
        self.drop_zones.iter().find(|z| z.name == name)
    }

    pub fn classes(&self) -> std::collections::BTreeSet<String> {
        self.objects.iter().map(|o| o.class.clone()).collect()
    }
}

/// Stochastic corruption of the oracle detector. All rates default to zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    /// Standard deviation of the box-center jitter per image axis, px.
    pub pixel_sigma: f64,
    /// Probability that an object goes undetected.
    pub drop_rate: f64,
    /// Probability, per scene object, of one extra detection at a random
    /// image location.
    pub spurious_rate: f64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.pixel_sigma >= 0.0) || !self.pixel_sigma.is_finite() {
            return Err(format!("pixel_sigma must be non-negative, got {}", self.pixel_sigma));
        }
        for (name, p) in [("drop_rate", self.drop_rate), ("spurious_rate", self.spurious_rate)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        Ok(())
    }
}

/// Detector confidence model and post-processing thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerceptionConfig {
    pub confidence_mean: f64,
    pub confidence_std: f64,
    pub confidence_threshold: f64,
    pub nms_iou: f64,
}

impl Default for PerceptionConfig {
    fn default() -> Self {
        Self {
            confidence_mean: 0.9,
            confidence_std: 0.05,
            confidence_threshold: DEFAULT_CONFIDENCE_THRESHOLD,
            nms_iou: DEFAULT_NMS_IOU,
        }
    }
}

impl PerceptionConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.confidence_std >= 0.0) || !self.confidence_std.is_finite() {
            return Err(format!("confidence_std must be non-negative, got {}", self.confidence_std));
        }
        for (name, v) in [
            ("confidence_mean", self.confidence_mean),
            ("confidence_threshold", self.confidence_threshold),
            ("nms_iou", self.nms_iou),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageSize {
    pub width: u32,
    pub height: u32,
}

impl ImageSize {
    pub fn center(&self) -> PixelPoint {
        PixelPoint::new(f64::from(self.width) / 2.0, f64::from(self.height) / 2.0)
    }

    pub fn contains(&self, p: &PixelPoint) -> bool {
        p.u >= 0.0 && p.v >= 0.0 && p.u < f64::from(self.width) && p.v < f64::from(self.height)
    }
}

fn draw_confidence<R: Rng>(perception: &PerceptionConfig, rng: &mut R) -> f64 {
    let c = if perception.confidence_std > 0.0 {
        Normal::new(perception.confidence_mean, perception.confidence_std)
            .expect("validated std")
            .sample(rng)
    } else {
        perception.confidence_mean
    };
    c.clamp(0.0, 1.0)
}

/// Geometric stand-in for the trained detector.
///
/// Each object whose center projects inside the image yields a square box
/// centered on the projection with side `2·radius·fx / zc`. Objects are
/// visited in scene order and every random draw comes from `rng`, so the
/// output is a function of the scene and the generator state.
pub fn oracle_detect<R: Rng>(
    scene: &Scene,
    cam: &CameraModel,
    image: &ImageSize,
    classes: &ClassList,
    noise: &NoiseSpec,
    perception: &PerceptionConfig,
    rng: &mut R,
) -> Result<Vec<Detection>, SimError> {
    let fx = cam.intrinsics.fx;
    let mut out = Vec::with_capacity(scene.objects.len());
    for obj in &scene.objects {
        let zc = cam.depth_of(&obj.position);
        if !(zc > 0.0) {
            return Err(SimError::ObjectBehindCamera(obj.id));
        }
        if noise.drop_rate > 0.0 && rng.random_bool(noise.drop_rate) {
            continue;
        }
        let mut center = cam.project(&obj.position)?;
        if noise.pixel_sigma > 0.0 {
            let jitter = Normal::new(0.0, noise.pixel_sigma).expect("validated sigma");
            center.u += jitter.sample(rng);
            center.v += jitter.sample(rng);
        }
        if !image.contains(&center) {
            continue;
        }
        let side = 2.0 * obj.radius * fx / zc;
        let confidence = draw_confidence(perception, rng);
        let class_id = classes
            .id(&obj.class)
            .ok_or_else(|| SimError::InvalidAction(format!("class {:?} not in class list", obj.class)))?;
        let bbox = BoundingBox::from_center(center, side, side);
        out.push(Detection::new(classes, class_id, confidence, bbox).expect("id from list"));
    }
    if noise.spurious_rate > 0.0 && !classes.is_empty() {
        for _ in 0..scene.objects.len() {
            if !rng.random_bool(noise.spurious_rate) {
                continue;
            }
            let class_id = rng.random_range(0..classes.len());
            let center = PixelPoint::new(
                rng.random_range(0.0..f64::from(image.width)),
                rng.random_range(0.0..f64::from(image.height)),
            );
            let side = rng.random_range(10.0..80.0);
            let confidence = draw_confidence(perception, rng);
            let bbox = BoundingBox::from_center(center, side, side);
            out.push(Detection::new(classes, class_id, confidence, bbox).expect("id in range"));
        }
    }
    Ok(out)
}

/// Highest-confidence detection of `class`; ties go to the box center
/// nearest `image_center`, then to the earlier detection.
pub fn select_target<'a>(
    dets: &'a [Detection],
    class: &str,
    image_center: &PixelPoint,
) -> Result<&'a Detection, SimError> {
    dets.iter()
        .enumerate()
        .filter(|(_, d)| d.label == class)
        .min_by(|(i, a), (j, b)| {
            b.confidence
                .total_cmp(&a.confidence)
                .then_with(|| {
                    let da = box_center(&a.bbox).distance(image_center);
                    let db = box_center(&b.bbox).distance(image_center);
                    da.total_cmp(&db)
                })
                .then(i.cmp(j))
        })
        .map(|(_, d)| d)
        .ok_or_else(|| SimError::ClassNotDetected(class.to_string()))
}

/// Grasp point and apparent radius recovered from a detection box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspEstimate {
    pub pixel: PixelPoint,
    pub point: WorldPoint,
    pub radius: f64,
}

/// Back-projects the box center onto the plane through the sphere center.
///
/// The sphere center sits one radius above the workbench and the radius
/// follows from the box side and the depth, `r = side·zc / (2·fx)`. The two
/// are solved jointly by fixed-point iteration, which contracts by roughly
/// `side / (2·fx)` per step.
pub fn estimate_grasp_point(
    cam: &CameraModel,
    det: &Detection,
    plane_height: f64,
) -> Result<GraspEstimate, GeometryError> {
    let pixel = box_center(&det.bbox);
    let side = det.bbox.width();
    let fx = cam.intrinsics.fx;
    let mut radius = 0.0;
    for _ in 0..100 {
        let p = cam.backproject_to_plane(&pixel, plane_height + radius)?;
        let zc = cam.depth_of(&p);
        if !(zc > 0.0) {
            return Err(GeometryError::NonPositiveDepth(zc));
        }
        let next = side * zc / (2.0 * fx);
        let converged = (next - radius).abs() <= 1e-15 * next.max(1.0);
        radius = next;
        if converged {
            break;
        }
    }
    let point = cam.backproject_to_plane(&pixel, plane_height + radius)?;
    Ok(GraspEstimate { pixel, point, radius })
}

/// Holder of the suction gripper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Gripper {
    #[default]
    Empty,
    Holding(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum EventKind {
    CommandAccepted {
        action: ActionRequest,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        utterance: Option<String>,
    },
    DetectionsPublished {
        /// Raw oracle output count before filtering and NMS.
        raw_count: usize,
        detections: Vec<Detection>,
    },
    TargetSelected {
        detection: Detection,
        grasp: GraspEstimate,
        drop_zone: String,
    },
    PhaseChanged {
        from: PickPlacePhase,
        to: PickPlacePhase,
    },
    PickCompleted {
        object_id: u32,
        class: String,
        drop_zone: String,
        position: WorldPoint,
    },
    Error {
        stage: String,
        error: String,
        detail: String,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::CommandAccepted { .. } => "CommandAccepted",
            Self::DetectionsPublished { .. } => "DetectionsPublished",
            Self::TargetSelected { .. } => "TargetSelected",
            Self::PhaseChanged { .. } => "PhaseChanged",
            Self::PickCompleted { .. } => "PickCompleted",
            Self::Error { .. } => "Error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    /// Simulated time, seconds.
    pub stamp: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}
