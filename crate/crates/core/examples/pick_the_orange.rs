//! Runs the bundled demo scenario end to end and prints the event log.

use agrobot::simulator::{parse_scenario, EventKind, DEMO_SCENARIO};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = parse_scenario(DEMO_SCENARIO)?;
    let report = scenario.run(None);
    for e in &report.events {
        let line = match &e.kind {
            EventKind::CommandAccepted { action, .. } => format!("accepted {action:?}"),
            EventKind::DetectionsPublished { raw_count, detections } => {
                format!("{raw_count} raw detections, {} kept", detections.len())
            }
            EventKind::TargetSelected { grasp, .. } => format!("grasp point {:?}", grasp.point),
            EventKind::PhaseChanged { from, to } => format!("{from:?} -> {to:?}"),
            EventKind::PickCompleted { class, drop_zone, position, .. } => {
                format!("{class} delivered to {drop_zone} at {position:?}")
            }
            other => format!("{other:?}"),
        };
        println!("{:7.2} s  {line}", e.stamp);
    }
    for o in &report.outcomes {
        println!("{:?}: {:?} in {:.2} s", o.utterance, o.status, o.finished - o.started);
    }
    Ok(())
}
