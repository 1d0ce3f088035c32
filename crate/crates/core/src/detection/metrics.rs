//! Precision, recall and F1 under greedy one-to-one matching.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{iou, BoundingBox, Detection};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub class_id: usize,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
}

impl GroundTruth {
    pub fn new(class_id: usize, bbox: BoundingBox) -> Self {
        Self { class_id, bbox }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ClassMetrics {
    fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        Self {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1: f1_score(precision, recall),
        }
    }
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DetectionMetrics {
    pub per_class: BTreeMap<usize, ClassMetrics>,
    /// Unweighted means over the classes present in the ground truth.
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

/// Matches predictions to ground truth class by class.
///
/// Within a class, predictions are visited in descending confidence (stable
/// on input order). Each claims the unmatched truth with the highest IoU,
/// provided that IoU is at least `match_iou`; otherwise it is a false
/// positive. Unclaimed truths are false negatives.
pub fn evaluate_detections(
    preds: &[Detection],
    truths: &[GroundTruth],
    match_iou: f64,
) -> DetectionMetrics {
    let classes: BTreeSet<usize> = preds
        .iter()
        .map(|p| p.class_id)
        .chain(truths.iter().map(|t| t.class_id))
        .collect();

    let mut out = DetectionMetrics::default();
    for class in classes {
        let mut order: Vec<&Detection> = preds.iter().filter(|p| p.class_id == class).collect();
        order.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
        let class_truths: Vec<&GroundTruth> = truths.iter().filter(|t| t.class_id == class).collect();
        let mut claimed = vec![false; class_truths.len()];

        let mut tp = 0;
        for p in &order {
            let best = class_truths
                .iter()
                .enumerate()
                .filter(|(i, _)| !claimed[*i])
                .map(|(i, t)| (i, iou(&p.bbox, &t.bbox)))
                .filter(|(_, o)| *o >= match_iou)
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
            if let Some((i, _)) = best {
                claimed[i] = true;
                tp += 1;
            }
        }
        let m = ClassMetrics::from_counts(tp, order.len() - tp, class_truths.len() - tp);
        out.tp += m.tp;
        out.fp += m.fp;
        out.fn_ += m.fn_;
        out.per_class.insert(class, m);
    }

    let present: Vec<&ClassMetrics> = out
        .per_class
        .iter()
        .filter(|(c, _)| truths.iter().any(|t| t.class_id == **c))
        .map(|(_, m)| m)
        .collect();
    if !present.is_empty() {
        let n = present.len() as f64;
        out.precision = present.iter().map(|m| m.precision).sum::<f64>() / n;
        out.recall = present.iter().map(|m| m.recall).sum::<f64>() / n;
        out.f1 = present.iter().map(|m| m.f1).sum::<f64>() / n;
    }
    out
}
