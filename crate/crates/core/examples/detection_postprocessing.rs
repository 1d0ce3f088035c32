//! Confidence filtering, class-aware non-maximum suppression and
//! precision/recall/F1 scoring against ground truth.

use agrobot::detection::{
    evaluate_detections, filter_by_confidence, nms, BoundingBox, ClassList, Detection, GroundTruth,
    DEFAULT_CONFIDENCE_THRESHOLD, DEFAULT_MATCH_IOU, DEFAULT_NMS_IOU,
};

fn main() {
    let classes = ClassList::default();
    let det = |class, conf, x: f64, y: f64| {
        Detection::new(&classes, class, conf, BoundingBox::new(x, y, x + 40.0, y + 40.0)).unwrap()
    };
    let raw = vec![
        det(2, 0.93, 100.0, 100.0),
        det(2, 0.88, 104.0, 102.0), // duplicate of the first orange
        det(0, 0.90, 106.0, 100.0), // overlapping apple survives: NMS is per class
        det(1, 0.55, 300.0, 200.0), // below the confidence threshold
        det(3, 0.81, 400.0, 50.0),
    ];
    let confident = filter_by_confidence(&raw, DEFAULT_CONFIDENCE_THRESHOLD);
    let kept = nms(&confident, DEFAULT_NMS_IOU);
    println!("{} raw, {} above {DEFAULT_CONFIDENCE_THRESHOLD}, {} after NMS", raw.len(), confident.len(), kept.len());
    for d in &kept {
        println!("  {:<7} {:.2} {:?}", d.label, d.confidence, d.bbox);
    }

    let truths = [
        GroundTruth::new(2, BoundingBox::new(101.0, 100.0, 141.0, 140.0)),
        GroundTruth::new(0, BoundingBox::new(105.0, 101.0, 145.0, 141.0)),
        GroundTruth::new(1, BoundingBox::new(300.0, 200.0, 340.0, 240.0)),
    ];
    let m = evaluate_detections(&kept, &truths, DEFAULT_MATCH_IOU);
    println!("tp {} fp {} fn {}: precision {:.3} recall {:.3} F1 {:.3}", m.tp, m.fp, m.fn_, m.precision, m.recall, m.f1);
}
