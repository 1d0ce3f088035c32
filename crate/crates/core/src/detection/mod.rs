//! Detection post-processing: confidence gating, IoU, class-aware NMS.
//!
//! Annotation parsing and dataset statistics live in [`dataset`], matching
//! and precision/recall/F1 in [`metrics`].

pub mod dataset;
pub mod metrics;

pub use dataset::{
    parse_annotation_file, summarize_dataset, summarize_dir, AnnotationRecord, DatasetError,
    DatasetSummary,
};
pub use metrics::{evaluate_detections, ClassMetrics, DetectionMetrics, GroundTruth};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::PixelPoint;

/// Minimum confidence a detection needs to survive filtering.
pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 0.67;
/// Same-class overlap above which the weaker box is suppressed.
pub const DEFAULT_NMS_IOU: f64 = 0.45;
/// IoU a prediction needs to count as a true positive.
pub const DEFAULT_MATCH_IOU: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassListError {
    #[error("class list is empty")]
    Empty,
    #[error("duplicate class name {0:?}")]
    Duplicate(String),
}

/// Ordered class names; the position of a name is its class id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct ClassList(Vec<String>);

impl ClassList {
    pub fn new<I, S>(names: I) -> Result<Self, ClassListError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(ClassListError::Empty);
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(ClassListError::Duplicate(n.clone()));
            }
        }
        Ok(Self(names))
    }

    /// Parses a names file: one class per nonempty line.
    pub fn from_names_file(text: &str) -> Result<Self, ClassListError> {
        Self::new(text.lines().map(str::trim).filter(|l| !l.is_empty()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn name(&self, id: usize) -> Option<&str> {
        self.0.get(id).map(String::as_str)
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.0.iter().position(|n| n == name)
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }
}

impl Default for ClassList {
    fn default() -> Self {
        Self(
            ["apple", "banana", "orange", "seed"]
                .into_iter()
                .map(String::from)
                .collect(),
        )
    }
}

impl TryFrom<Vec<String>> for ClassList {
    type Error = ClassListError;

    fn try_from(v: Vec<String>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<ClassList> for Vec<String> {
    fn from(c: ClassList) -> Self {
        c.0
    }
}

/// Axis-aligned pixel box with continuous coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BoundingBox {
    /// Normalizes corner order so the box invariant always holds.
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self {
            x_min: x0.min(x1),
            y_min: y0.min(y1),
            x_max: x0.max(x1),
            y_max: y0.max(y1),
        }
    }

    pub fn from_center(center: PixelPoint, width: f64, height: f64) -> Self {
        Self::new(
            center.u - width / 2.0,
            center.v - height / 2.0,
            center.u + width / 2.0,
            center.v + height / 2.0,
        )
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn intersection_area(&self, other: &BoundingBox) -> f64 {
        let w = (self.x_max.min(other.x_max) - self.x_min.max(other.x_min)).max(0.0);
        let h = (self.y_max.min(other.y_max) - self.y_min.max(other.y_min)).max(0.0);
        w * h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub class_id: usize,
    pub label: String,
    pub confidence: f64,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
}

impl Detection {
    pub fn new(classes: &ClassList, class_id: usize, confidence: f64, bbox: BoundingBox) -> Option<Self> {
        let label = classes.name(class_id)?.to_string();
        Some(Self {
            class_id,
            label,
            confidence: confidence.clamp(0.0, 1.0),
            bbox,
        })
    }
}

/// Intersection over union; zero when both boxes are degenerate.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

pub fn box_center(b: &BoundingBox) -> PixelPoint {
    PixelPoint::new((b.x_min + b.x_max) / 2.0, (b.y_min + b.y_max) / 2.0)
}

/// Keeps detections with `confidence >= threshold`, preserving order.
pub fn filter_by_confidence(dets: &[Detection], threshold: f64) -> Vec<Detection> {
    dets.iter()
        .filter(|d| d.confidence >= threshold)
        .cloned()
        .collect()
}

/// Greedy class-aware non-maximum suppression.
///
/// Detections are ranked by confidence (descending), then class id, then
/// input position. Walking that order, a detection is kept unless a kept
/// detection of the same class overlaps it with IoU above `iou_threshold`.
/// The result is in rank order.
pub fn nms(dets: &[Detection], iou_threshold: f64) -> Vec<Detection> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&i, &j| {
        dets[j]
            .confidence
            .total_cmp(&dets[i].confidence)
            .then(dets[i].class_id.cmp(&dets[j].class_id))
            .then(i.cmp(&j))
    });

    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        let suppressed = kept.iter().any(|&k| {
            dets[k].class_id == dets[i].class_id && iou(&dets[k].bbox, &dets[i].bbox) > iou_threshold
        });
        if !suppressed {
            kept.push(i);
        }
    }
    kept.into_iter().map(|i| dets[i].clone()).collect()
}
