//! One PASS/FAIL line per primary acceptance criterion. Runs without the
//! libtest harness so the lines always reach stdout; exits nonzero if any
//! criterion fails.

mod common;

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use agrobot::command::{levenshtein, match_utterance, Utterance, Verb, Vocabulary};
use agrobot::control::{actuator_step, plan_trajectory, ArmControlConfig, JointTracker, Pid, PidGains};
use agrobot::detection::{
    evaluate_detections, nms, summarize_dir, BoundingBox, ClassList, Detection, GroundTruth,
    DEFAULT_CONFIDENCE_THRESHOLD, DEFAULT_MATCH_IOU,
};
use agrobot::geometry::{
    camera_to_pixel, camera_to_world, estimate_homography, pixel_to_camera_ray, pose_from_homography,
    rotation_angle_between, world_to_camera, CameraExtrinsics, CameraIntrinsics, CameraModel, CameraPoint,
    PixelPoint, PlanarCorrespondence, WorldPoint,
};
use agrobot::kinematics::{
    forward_kinematics, ik_all_solutions, ArmGeometry, JointAngles, DEFAULT_LIMITS, WIDE_LIMITS,
};
use agrobot::service::{Service, ServiceConfig};
use agrobot::simulator::{parse_scenario, EventKind, PerceptionConfig, DEMO_SCENARIO};
use futures::StreamExt;
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tokio::io::{AsyncReadExt, AsyncWriteExt};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

fn ik_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for i in 0..10_000 {
        let g = ArmGeometry::with_limits(
            uniform(&mut rng, 0.05, 1.0),
            uniform(&mut rng, 0.05, 1.0),
            uniform(&mut rng, 0.05, 1.0),
            WIDE_LIMITS,
        )
        .map_err(|e| e.to_string())?;
        let q = JointAngles::from_array(std::array::from_fn(|j| {
            uniform(&mut rng, WIDE_LIMITS[j].min, WIDE_LIMITS[j].max)
        }));
        let p = forward_kinematics(&g, &q);
        let best = ik_all_solutions(&g, &p)
            .iter()
            .map(|s| forward_kinematics(&g, &s.joints).distance(&p))
            .fold(f64::INFINITY, f64::min);
        ensure(best <= 1e-9, || format!("config {i}: {q:?} best branch error {best:e} m"))?;
        worst = worst.max(best);
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("10000 configs, worst error {worst:.1e} m, {elapsed:.0?}"))
}

fn worked_ik_case() -> Outcome {
    let g = ArmGeometry::new(1.0, 1.0, 1.0).map_err(|e| e.to_string())?;
    let target = WorldPoint::new(1.0, 0.0, 2.0);
    let sols = ik_all_solutions(&g, &target);
    let expected = [JointAngles::new(0.0, 0.0, FRAC_PI_2), JointAngles::new(0.0, FRAC_PI_2, -FRAC_PI_2)];
    ensure(sols.len() == 2, || format!("{} solutions", sols.len()))?;
    for e in expected {
        let found = sols.iter().find(|s| s.joints.max_distance(&e) < 1e-12);
        let s = found.ok_or_else(|| format!("missing {e:?} in {sols:?}"))?;
        let err = forward_kinematics(&g, &s.joints).distance(&target);
        ensure(err <= 1e-12, || format!("FK error {err:e} for {:?}", s.joints))?;
    }
    Ok("{(0, 0, π/2), (0, π/2, −π/2)} both FK-verified to 1e-12".into())
}

/// Textbook formulation: repeatedly take the best remaining box and drop
/// every same-class box overlapping it.
fn nms_oracle(dets: &[Detection], thr: f64) -> Vec<Detection> {
    let mut pool: Vec<(usize, &Detection)> = dets.iter().enumerate().collect();
    let mut out = Vec::new();
    while !pool.is_empty() {
        let mut best = 0;
        for (k, (i, d)) in pool.iter().enumerate() {
            let (bi, b) = pool[best];
            let better = d.confidence > b.confidence
                || (d.confidence == b.confidence && (d.class_id, *i) < (b.class_id, bi));
            if better {
                best = k;
            }
        }
        let (_, top) = pool.remove(best);
        out.push(top.clone());
        pool.retain(|(_, d)| d.class_id != top.class_id || agrobot::detection::iou(&d.bbox, &top.bbox) <= thr);
    }
    out
}

fn nms_equivalence() -> Outcome {
    let classes = ClassList::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for set in 0..1000 {
        let n = rng.random_range(0..=20);
        let dets: Vec<Detection> = (0..n)
            .map(|_| {
                let (x, y) = (uniform(&mut rng, 0.0, 100.0), uniform(&mut rng, 0.0, 100.0));
                let (w, h) = (uniform(&mut rng, 1.0, 40.0), uniform(&mut rng, 1.0, 40.0));
                // coarse confidences force ties
                let conf = rng.random_range(1..=10) as f64 / 10.0;
                Detection::new(&classes, rng.random_range(0..4), conf, BoundingBox::new(x, y, x + w, y + h)).unwrap()
            })
            .collect();
        let thr = uniform(&mut rng, 0.1, 0.9);
        let kept = nms(&dets, thr);
        ensure(kept == nms_oracle(&dets, thr), || format!("set {set} differs from oracle"))?;
        ensure(nms(&kept, thr) == kept, || format!("set {set} not idempotent"))?;
    }
    Ok("1000 sets equal the oracle and are idempotent".into())
}

fn random_camera(rng: &mut ChaCha8Rng) -> CameraModel {
    loop {
        let fx = uniform(rng, 200.0, 1500.0);
        let k = CameraIntrinsics::new(fx, fx * uniform(rng, 0.9, 1.1), uniform(rng, 200.0, 800.0), uniform(rng, 150.0, 600.0))
            .unwrap();
        let eye = WorldPoint::new(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0), uniform(rng, 0.5, 3.0));
        let target = WorldPoint::new(uniform(rng, -0.3, 0.3), uniform(rng, -0.3, 0.3), 0.0);
        let up = Vector3::new(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0));
        if let Ok(e) = CameraExtrinsics::look_at(eye, target, up) {
            return CameraModel::new(k, e);
        }
    }
}

fn geometry_round_trips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut pix, mut world, mut plane): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for i in 0..1000 {
        let cam = random_camera(&mut rng);
        let k = &cam.intrinsics;
        let e = &cam.extrinsics;

        let px = PixelPoint::new(uniform(&mut rng, 0.0, 1000.0), uniform(&mut rng, 0.0, 800.0));
        let depth = uniform(&mut rng, 0.1, 10.0);
        let ray = pixel_to_camera_ray(k, &px);
        let c = CameraPoint::from_vector(&(ray * (depth / ray.z)));
        let back = camera_to_pixel(k, &c).map_err(|e| e.to_string())?;
        pix = pix.max(back.distance(&px));

        let w = WorldPoint::new(uniform(&mut rng, -5.0, 5.0), uniform(&mut rng, -5.0, 5.0), uniform(&mut rng, -5.0, 5.0));
        world = world.max(camera_to_world(e, &world_to_camera(e, &w)).distance(&w));

        let h = uniform(&mut rng, -0.1, 0.1);
        let p = WorldPoint::new(uniform(&mut rng, -0.4, 0.4), uniform(&mut rng, -0.4, 0.4), h);
        if cam.depth_of(&p) > 0.0 {
            let hit = cam
                .backproject_to_plane(&cam.project(&p).map_err(|e| e.to_string())?, h)
                .map_err(|e| format!("config {i}: {e}"))?;
            plane = plane.max(hit.distance(&p));
        }
    }
    ensure(pix < 1e-9, || format!("pixel round trip {pix:e} px"))?;
    ensure(world < 1e-9, || format!("world round trip {world:e} m"))?;
    ensure(plane < 1e-6, || format!("plane round trip {plane:e} m"))?;
    Ok(format!("pixel {pix:.1e} px, world {world:.1e} m, plane {plane:.1e} m"))
}

fn pose_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut rot, mut trans): (f64, f64) = (0.0, 0.0);
    for i in 0..100 {
        let cam = random_camera(&mut rng);
        let corr: Vec<PlanarCorrespondence> = (0..25)
            .map(|j| {
                let (x, y) = (-0.4 + 0.2 * (j % 5) as f64, -0.4 + 0.2 * (j / 5) as f64);
                PlanarCorrespondence::new(x, y, cam.project(&WorldPoint::new(x, y, 0.0)).unwrap())
            })
            .collect();
        let h = estimate_homography(&corr).map_err(|e| format!("pose {i}: {e}"))?;
        let pose = pose_from_homography(&cam.intrinsics, &h.h).map_err(|e| format!("pose {i}: {e}"))?;
        rot = rot.max(rotation_angle_between(pose.rotation(), cam.extrinsics.rotation()));
        trans = trans.max((pose.translation() - cam.extrinsics.translation()).norm());
    }
    ensure(rot < 1e-6, || format!("rotation error {rot:e} rad"))?;
    ensure(trans < 1e-8, || format!("translation error {trans:e} m"))?;
    Ok(format!("100 poses, rotation {rot:.1e} rad, translation {trans:.1e} m"))
}

fn dataset_tables() -> Outcome {
    let hist_dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    common::write_dataset(hist_dir.path(), &common::histogram_fixture());
    let hist = summarize_dir(hist_dir.path()).map_err(|e| e.to_string())?;
    ensure(hist.objects_per_image == common::histogram_expected(), || {
        format!("histogram {:?}", hist.objects_per_image)
    })?;

    let class_dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    common::write_dataset(class_dir.path(), &common::class_fixture());
    let classes = summarize_dir(class_dir.path()).map_err(|e| e.to_string())?;
    ensure(classes.per_class == common::class_totals_expected(), || {
        format!("class totals {:?}", classes.per_class)
    })?;
    Ok(format!(
        "histogram over {} images ({} objects); class totals over {} objects; separate fixtures",
        hist.images,
        hist.histogram_objects(),
        classes.total_objects()
    ))
}

fn metrics_cases() -> Outcome {
    let classes = ClassList::default();
    let b = |x0: f64, y0: f64, x1: f64, y1: f64| BoundingBox::new(x0, y0, x1, y1);
    let a = b(0.0, 0.0, 10.0, 10.0);
    let far = b(100.0, 100.0, 110.0, 110.0);
    let third = b(5.0, 0.0, 15.0, 10.0); // IoU 1/3 with a
    let most = b(2.0, 0.0, 12.0, 10.0); // IoU 2/3 with a
    let p = |c: usize, conf: f64, bb: BoundingBox| Detection::new(&classes, c, conf, bb).unwrap();
    let t = GroundTruth::new;
    type Case = (Vec<Detection>, Vec<GroundTruth>, (usize, usize, usize));
    let cases: Vec<Case> = vec![
        (vec![], vec![], (0, 0, 0)),
        (vec![p(0, 0.9, a)], vec![t(0, a)], (1, 0, 0)),
        (vec![p(0, 0.9, a)], vec![t(1, a)], (0, 1, 1)),
        (vec![p(0, 0.9, a)], vec![], (0, 1, 0)),
        (vec![], vec![t(0, a)], (0, 0, 1)),
        (vec![p(0, 0.9, third)], vec![t(0, a)], (0, 1, 1)),
        (vec![p(0, 0.9, most)], vec![t(0, a)], (1, 0, 0)),
        (vec![p(0, 0.9, a), p(0, 0.8, most)], vec![t(0, a)], (1, 1, 0)),
        (vec![p(0, 0.9, a), p(0, 0.8, far)], vec![t(0, a), t(0, far)], (2, 0, 0)),
        (vec![p(0, 0.9, a)], vec![t(0, a), t(0, far)], (1, 0, 1)),
        (vec![p(0, 0.9, a), p(1, 0.9, far)], vec![t(0, a), t(0, far)], (1, 1, 1)),
        (vec![p(0, 0.9, most), p(0, 0.8, a)], vec![t(0, a)], (1, 1, 0)),
        // the higher-confidence box claims the first truth, leaving the
        // second box nothing above the IoU bar
        (
            vec![p(0, 0.9, b(1.0, 0.0, 11.0, 10.0)), p(0, 0.8, a)],
            vec![t(0, a), t(0, b(4.0, 0.0, 14.0, 10.0))],
            (1, 1, 1),
        ),
        (
            vec![p(0, 0.9, b(1.0, 0.0, 11.0, 10.0)), p(0, 0.95, a)],
            vec![t(0, a), t(0, b(4.0, 0.0, 14.0, 10.0))],
            (2, 0, 0),
        ),
        (vec![p(0, 0.9, a)], vec![t(0, b(0.0, 0.0, 10.0, 20.0))], (1, 0, 0)),
        (vec![p(0, 0.9, a)], vec![t(0, b(0.0, 0.0, 10.0, 20.5))], (0, 1, 1)),
        (
            vec![p(0, 0.9, a), p(1, 0.8, far), p(2, 0.7, most)],
            vec![t(0, a), t(1, far), t(2, most)],
            (3, 0, 0),
        ),
        (
            vec![p(3, 0.9, a), p(3, 0.8, a), p(3, 0.7, a), p(3, 0.6, a)],
            vec![t(3, a)],
            (1, 3, 0),
        ),
        (vec![p(0, 0.9, b(0.0, 0.0, 0.0, 0.0))], vec![t(0, a)], (0, 1, 1)),
        (
            vec![p(0, 0.9, a), p(0, 0.8, far)],
            vec![t(0, a), t(2, b(50.0, 50.0, 60.0, 60.0))],
            (1, 1, 1),
        ),
    ];
    for (i, (preds, truths, want)) in cases.iter().enumerate() {
        let m = evaluate_detections(preds, truths, DEFAULT_MATCH_IOU);
        ensure((m.tp, m.fp, m.fn_) == *want, || {
            format!("case {}: got {:?}, want {want:?}", i + 1, (m.tp, m.fp, m.fn_))
        })?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let truths: Vec<GroundTruth> = (0..40)
        .map(|_| {
            let (x, y) = (uniform(&mut rng, 0.0, 500.0), uniform(&mut rng, 0.0, 500.0));
            t(rng.random_range(0..4), b(x, y, x + 20.0, y + 20.0))
        })
        .collect();
    let preds: Vec<Detection> = truths.iter().map(|g| p(g.class_id, 1.0, g.bbox)).collect();
    let perfect = evaluate_detections(&preds, &truths, DEFAULT_MATCH_IOU);
    ensure(perfect.per_class.values().all(|c| c.f1 == 1.0), || format!("{perfect:?}"))?;
    ensure(DEFAULT_CONFIDENCE_THRESHOLD == 0.67, || "threshold constant".into())?;
    ensure(PerceptionConfig::default().confidence_threshold == 0.67, || "threshold default".into())?;
    Ok(format!(
        "{} hand-computed cases, perfect input F1 = 1.0 on {} classes, threshold 0.67",
        cases.len(),
        perfect.per_class.len()
    ))
}

fn demo_end_to_end() -> Outcome {
    let start = Instant::now();
    let scenario = parse_scenario(DEMO_SCENARIO).map_err(|e| e.to_string())?;
    ensure(scenario.utterances == ["pick the orange"], || format!("{:?}", scenario.utterances))?;
    ensure(scenario.config.noise == Default::default(), || "noise is on".into())?;
    let in_reach = scenario.scene.objects.iter().all(|o| {
        let g = &scenario.config.arm;
        !ik_all_solutions(g, &WorldPoint::new(o.position.x, o.position.y, o.position.z + g.tool_offset)).is_empty()
    });
    ensure(scenario.scene.objects.len() == 4 && in_reach, || "demo needs 4 objects in reach".into())?;
    let orange = scenario.scene.objects.iter().find(|o| o.class == "orange").unwrap().clone();

    let report = scenario.run(None);
    let wall = start.elapsed();
    let completed: Vec<_> = report
        .events
        .iter()
        .filter_map(|e| match &e.kind {
            EventKind::PickCompleted { object_id, position, .. } => Some((*object_id, *position)),
            _ => None,
        })
        .collect();
    ensure(completed.len() == 1, || format!("{} PickCompleted events", completed.len()))?;
    ensure(completed[0].0 == orange.id, || "wrong object delivered".into())?;

    let grasp = report
        .events
        .iter()
        .find_map(|e| match &e.kind {
            EventKind::TargetSelected { grasp, .. } => Some(grasp.point),
            _ => None,
        })
        .ok_or("no TargetSelected event")?;
    let grasp_error = grasp.distance(&orange.position);
    ensure(grasp_error < 1e-6, || format!("grasp error {grasp_error:e} m"))?;

    let zone = scenario.scene.drop_zones[0].position;
    let placed = report
        .final_scene
        .objects
        .iter()
        .find(|o| o.id == orange.id)
        .ok_or("orange vanished")?
        .position;
    let place_error = placed.horizontal_distance(&zone);
    let tol = scenario.config.control.grasp_tolerance;
    ensure(place_error <= tol, || format!("placed {place_error:e} m from the zone"))?;

    let sim_time = report.outcomes[0].finished;
    ensure(sim_time < 30.0, || format!("simulated {sim_time} s"))?;
    ensure(wall < Duration::from_secs(5), || format!("wall clock {wall:?}"))?;
    let again = scenario.run(None).to_json();
    ensure(report.to_json() == again, || "reports differ between runs".into())?;
    Ok(format!(
        "one PickCompleted, grasp error {grasp_error:.1e} m, placed {place_error:.1e} m from zone, {sim_time:.2} s simulated, {wall:.0?} wall"
    ))
}

fn closed_loop_control() -> Outcome {
    let cfg = ArmControlConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for pair in 0..100 {
        let sample = |rng: &mut ChaCha8Rng| {
            JointAngles::from_array(std::array::from_fn(|j| uniform(rng, DEFAULT_LIMITS[j].min, DEFAULT_LIMITS[j].max)))
        };
        let (from, to) = (sample(&mut rng), sample(&mut rng));
        let traj = plan_trajectory(&from, &to, cfg.max_joint_speed);
        let mut tracker = JointTracker::new(cfg.gains());
        let mut q = from;
        let steps = ((traj.duration + 1.0) / cfg.dt).ceil() as usize;
        for k in 0..steps {
            let u = tracker.command(&traj, k as f64 * cfg.dt, &q, cfg.dt).map_err(|e| e.to_string())?;
            q = actuator_step(&q, &u, cfg.dt, cfg.actuator_speed_limit, &DEFAULT_LIMITS).map_err(|e| e.to_string())?;
        }
        let err = q.max_distance(&to);
        ensure(err <= 1e-3, || format!("pair {pair}: error {err:e} rad"))?;
        worst = worst.max(err);
    }

    let gains = PidGains::default();
    let mut pid = Pid::new(gains);
    for step in 0..1_000_000 {
        let u = pid.step(1.0, cfg.dt).map_err(|e| e.to_string())?;
        let windup = pid.state.integral.abs();
        ensure(windup <= gains.integral_limit && u.abs() <= gains.output_limit, || {
            format!("step {step}: integral {windup}, output {u}")
        })?;
    }
    Ok(format!("100 pairs, worst final error {worst:.1e} rad; 1e6 saturated steps within bounds"))
}

/// Plain recursive edit distance with memoization.
fn edit_distance_oracle(a: &[char], b: &[char], memo: &mut HashMap<(usize, usize), usize>) -> usize {
    if a.is_empty() || b.is_empty() {
        return a.len() + b.len();
    }
    if let Some(d) = memo.get(&(a.len(), b.len())) {
        return *d;
    }
    let (ra, rb) = (&a[..a.len() - 1], &b[..b.len() - 1]);
    let cost = usize::from(a[a.len() - 1] != b[b.len() - 1]);
    let d = (edit_distance_oracle(ra, b, memo) + 1)
        .min(edit_distance_oracle(a, rb, memo) + 1)
        .min(edit_distance_oracle(ra, rb, memo) + cost);
    memo.insert((a.len(), b.len()), d);
    d
}

fn command_matching() -> Outcome {
    let vocab = Vocabulary::default_vocabulary();
    let exact = match_utterance(&vocab, &Utterance::from_text("pick the orange"), 3).map_err(|e| e.to_string())?;
    ensure(
        exact[0].action.verb == Verb::Pick
            && exact[0].action.target_class.as_deref() == Some("orange")
            && exact[0].score == 1.0,
        || format!("{:?}", exact[0]),
    )?;
    let typo = match_utterance(&vocab, &Utterance::from_text("pick the oranje"), 3).map_err(|e| e.to_string())?;
    ensure(
        typo[0].action.target_class.as_deref() == Some("orange") && (typo[0].score - 5.0 / 6.0).abs() < 1e-12,
        || format!("{:?}", typo[0]),
    )?;

    let alphabet: Vec<char> = "abcde果é".chars().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..10_000 {
        let word = |rng: &mut ChaCha8Rng| -> Vec<char> {
            (0..rng.random_range(0..10)).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect()
        };
        let (a, b) = (word(&mut rng), word(&mut rng));
        let (sa, sb): (String, String) = (a.iter().collect(), b.iter().collect());
        let want = edit_distance_oracle(&a, &b, &mut HashMap::new());
        ensure(levenshtein(&sa, &sb) == want, || format!("pair {i}: {sa:?} {sb:?}"))?;
    }
    Ok("exact 1.0, \"oranje\" 5/6, Levenshtein equals the oracle on 10000 pairs".into())
}

async fn http_post(addr: std::net::SocketAddr, path: &str, body: &str) -> Result<String, String> {
    let mut stream = tokio::net::TcpStream::connect(addr).await.map_err(|e| e.to_string())?;
    let req = format!(
        "POST {path} HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    stream.write_all(req.as_bytes()).await.map_err(|e| e.to_string())?;
    let mut resp = String::new();
    stream.read_to_string(&mut resp).await.map_err(|e| e.to_string())?;
    Ok(resp)
}

async fn service_pick() -> Result<(), String> {
    let config = ServiceConfig {
        time_scale: 40.0,
        ..ServiceConfig::default()
    };
    let service = Service::start(config, Some(DEMO_SCENARIO)).map_err(|e| e.to_string())?;
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.map_err(|e| e.to_string())?;
    let addr = listener.local_addr().map_err(|e| e.to_string())?;
    tokio::spawn(service.serve(listener));

    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/api/v1/stream?topics=events"))
        .await
        .map_err(|e| e.to_string())?;
    let resp = http_post(addr, "/api/v1/command", r#"{"text":"pick the orange"}"#).await?;
    ensure(resp.starts_with("HTTP/1.1 200"), || resp.lines().next().unwrap_or("").to_string())?;
    let wait = async {
        while let Some(msg) = ws.next().await {
            let text = msg.map_err(|e| e.to_string())?.into_text().map_err(|e| e.to_string())?;
            let frame: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
            if frame["payload"]["kind"] == "PickCompleted" {
                return Ok(());
            }
        }
        Err("stream ended before PickCompleted".to_string())
    };
    tokio::time::timeout(Duration::from_secs(20), wait)
        .await
        .map_err(|_| "no PickCompleted within 20 s".to_string())?
}

fn primary_without_console() -> Outcome {
    let scn = concat!(env!("CARGO_MANIFEST_DIR"), "/assets/demo.scn");
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_agrobot"))
            .args(["sim", "run", scn])
            .output()
            .map_err(|e| e.to_string())
    };
    let (a, b) = (run()?, run()?);
    ensure(a.status.success(), || String::from_utf8_lossy(&a.stderr).into_owned())?;
    ensure(a.stdout == b.stdout, || "CLI reports differ".into())?;
    let report: Value = serde_json::from_slice(&a.stdout).map_err(|e| e.to_string())?;
    let picks = report["events"]
        .as_array()
        .map_or(0, |ev| ev.iter().filter(|e| e["kind"] == "PickCompleted").count());
    ensure(picks == 1, || format!("CLI report has {picks} PickCompleted"))?;

    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    rt.block_on(service_pick())?;
    Ok("CLI sim run and HTTP + stream pick succeed with no console assets".into())
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("IK/FK round trip", ik_round_trip),
        ("Worked IK case", worked_ik_case),
        ("NMS oracle equivalence", nms_equivalence),
        ("Geometry round trips", geometry_round_trips),
        ("Pose recovery", pose_recovery),
        ("Dataset summarizer tables", dataset_tables),
        ("Metrics substitute", metrics_cases),
        ("End-to-end demo", demo_end_to_end),
        ("Closed-loop control", closed_loop_control),
        ("Command matching", command_matching),
        ("Primary suite without console", primary_without_console),
    ];
    let mut failures = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} [{elapsed:.0?}]"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {name}: {detail} [{elapsed:.0?}]");
            }
        }
    }
    println!("{} of {} primary criteria pass", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
