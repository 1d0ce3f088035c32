use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    estimate_grasp_point, oracle_detect, select_target, Event, EventKind, Extent, Gripper,
    ImageSize, NoiseSpec, PerceptionConfig, Scene, SceneObject, SimError, DropZone,
};
use crate::command::{ActionRequest, Verb};
use crate::control::{
    actuator_step, pick_place_advance, plan_trajectory, ArmControlConfig, ControlError,
    JointTrajectory, JointTracker, PickPlacePhase,
};
use crate::detection::{filter_by_confidence, nms, ClassList, Detection};
use crate::geometry::{CameraModel, WorldPoint};
use crate::kinematics::{
    elbow_position, forward_kinematics, ik_all_solutions_near, inverse_kinematics_near,
    select_solution, ArmGeometry, ElbowBranch, JointAngles, KinematicsError,
};

/// Fixed parameters of a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub camera: CameraModel,
    pub image: ImageSize,
    pub arm: ArmGeometry,
    pub control: ArmControlConfig,
    pub noise: NoiseSpec,
    pub perception: PerceptionConfig,
    pub classes: ClassList,
    /// Joint configuration the arm starts in and returns to.
    pub home: JointAngles,
    /// Simulated-time budget per command, seconds.
    pub max_task_duration: f64,
}

/// How the most recent command ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status")]
pub enum TaskOutcome {
    Completed { object_id: u32, class: String, drop_zone: String },
    Homed,
    Stopped,
    Failed { error: String, detail: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSnapshot {
    pub stamp: f64,
    pub plane_height: f64,
    pub extent: Extent,
    /// Objects resting on the workbench.
    pub objects: Vec<SceneObject>,
    /// Object attached to the gripper, if any.
    pub held: Option<SceneObject>,
    pub drop_zones: Vec<DropZone>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSnapshot {
    pub stamp: f64,
    pub joints: JointAngles,
    /// Forward kinematics of `joints`.
    pub end_effector: WorldPoint,
    pub elbow: WorldPoint,
    pub phase: PickPlacePhase,
    pub gripper: Gripper,
    pub busy: bool,
}

#[derive(Debug, Clone, PartialEq)]
struct Segment {
    trajectory: JointTrajectory,
    t: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct PickPlan {
    drop_zone: String,
    approach: JointAngles,
    descend: JointAngles,
    transit: JointAngles,
}

#[derive(Debug, Clone, PartialEq)]
struct Task {
    /// `None` for a plain homing move.
    pick: Option<PickPlan>,
    segment: Option<Segment>,
    tracker: JointTracker,
    dwell: f64,
    elapsed: f64,
    /// Object set down at the end of Release.
    delivered: Option<u32>,
}

impl Task {
    fn new(pick: Option<PickPlan>, config: &SimConfig) -> Self {
        Self {
            pick,
            segment: None,
            tracker: JointTracker::new(config.control.gains()),
            dwell: 0.0,
            elapsed: 0.0,
            delivered: None,
        }
    }
}

/// The single-owner world state. Cloning yields an independent copy that
/// evolves identically under identical inputs.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: SimConfig,
    scene: Scene,
    joints: JointAngles,
    gripper: Gripper,
    held: Option<SceneObject>,
    phase: PickPlacePhase,
    clock: f64,
    seed: u64,
    rng: ChaCha8Rng,
    events: Vec<Event>,
    detections: Vec<Detection>,
    task: Option<Task>,
    last_outcome: Option<TaskOutcome>,
}

/// Closest limit-feasible IK solution to `current`; reports why no branch
/// works when none does.
fn solve_ik(g: &ArmGeometry, target: &WorldPoint, current: &JointAngles) -> Result<JointAngles, KinematicsError> {
    let candidates = ik_all_solutions_near(g, target, current);
    if candidates.is_empty() {
        inverse_kinematics_near(g, target, ElbowBranch::ElbowA, current)?;
        inverse_kinematics_near(g, target, ElbowBranch::ElbowB, current)?;
    }
    Ok(select_solution(&candidates, current)?.joints)
}

impl Simulator {
    pub fn new(config: SimConfig, scene: Scene, seed: u64) -> Self {
        Self {
            joints: config.home,
            config,
            scene,
            gripper: Gripper::Empty,
            held: None,
            phase: PickPlacePhase::Done,
            clock: 0.0,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            events: Vec::new(),
            detections: Vec::new(),
            task: None,
            last_outcome: None,
        }
    }

    /// Starts the clock at `clock` instead of zero.
    pub fn starting_at(mut self, clock: f64) -> Self {
        self.clock = clock;
        self
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn joints(&self) -> JointAngles {
        self.joints
    }

    pub fn end_effector(&self) -> WorldPoint {
        forward_kinematics(&self.config.arm, &self.joints)
    }

    pub fn gripper(&self) -> Gripper {
        self.gripper
    }

    pub fn held(&self) -> Option<&SceneObject> {
        self.held.as_ref()
    }

    pub fn phase(&self) -> PickPlacePhase {
        self.phase
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Detections published by the most recent pick or place.
    pub fn detections(&self) -> &[Detection] {
        &self.detections
    }

    pub fn is_busy(&self) -> bool {
        self.task.is_some()
    }

    pub fn last_outcome(&self) -> Option<&TaskOutcome> {
        self.last_outcome.as_ref()
    }

    /// Number of objects in the world, free or held.
    pub fn object_count(&self) -> usize {
        self.scene.objects.len() + usize::from(self.held.is_some())
    }

    pub fn scene_snapshot(&self) -> SceneSnapshot {
        SceneSnapshot {
            stamp: self.clock,
            plane_height: self.scene.plane_height,
            extent: self.scene.extent,
            objects: self.scene.objects.clone(),
            held: self.held.clone(),
            drop_zones: self.scene.drop_zones.clone(),
        }
    }

    pub fn arm_snapshot(&self) -> ArmSnapshot {
        ArmSnapshot {
            stamp: self.clock,
            joints: self.joints,
            end_effector: self.end_effector(),
            elbow: elbow_position(&self.config.arm, &self.joints),
            phase: self.phase,
            gripper: self.gripper,
            busy: self.is_busy(),
        }
    }

    fn log(&mut self, kind: EventKind) {
        self.events.push(Event { stamp: self.clock, kind });
    }

    /// Appends an Error event for a failure outside the simulator, such as a
    /// rejected utterance.
    pub fn log_error(&mut self, stage: &str, error: &str, detail: &str) {
        self.log(EventKind::Error {
            stage: stage.to_string(),
            error: error.to_string(),
            detail: detail.to_string(),
        });
    }

    fn set_phase(&mut self, to: PickPlacePhase) {
        if to != self.phase {
            let from = self.phase;
            self.phase = to;
            self.log(EventKind::PhaseChanged { from, to });
        }
    }

    /// Starts executing a validated action.
    ///
    /// Pick and place run detection, target selection, back-projection and
    /// IK for every waypoint right away; any failure is logged and returned
    /// with the scene untouched. `stop` aborts the running task; every other
    /// verb is rejected with `ArmBusy` while a task runs.
    pub fn submit(&mut self, action: &ActionRequest, utterance: Option<&str>) -> Result<(), SimError> {
        if !action.is_well_formed() {
            return Err(SimError::InvalidAction(format!(
                "{} {} a target",
                action.verb,
                if action.verb.needs_target() { "needs" } else { "takes no" }
            )));
        }
        if action.verb != Verb::Stop && self.is_busy() {
            return Err(SimError::ArmBusy);
        }
        self.log(EventKind::CommandAccepted {
            action: action.clone(),
            utterance: utterance.map(str::to_string),
        });
        self.last_outcome = None;
        match action.verb {
            Verb::Stop => {
                if self.task.take().is_some() {
                    self.set_down_held();
                    self.set_phase(PickPlacePhase::Done);
                }
                self.last_outcome = Some(TaskOutcome::Stopped);
                Ok(())
            }
            Verb::Home => {
                self.start(Task::new(None, &self.config), PickPlacePhase::Home);
                Ok(())
            }
            Verb::Pick | Verb::Place => match self.plan_pick(action) {
                Ok(plan) => {
                    self.start(Task::new(Some(plan), &self.config), PickPlacePhase::Approach);
                    Ok(())
                }
                Err(e) => {
                    self.record_failure(&e);
                    Err(e)
                }
            },
        }
    }

    fn plan_pick(&mut self, action: &ActionRequest) -> Result<PickPlan, SimError> {
        let class = action.target_class.clone().expect("well-formed pick has a target");
        let zone = match &action.drop_zone {
            Some(name) => self
                .scene
                .drop_zone(name)
                .ok_or_else(|| SimError::UnknownDropZone(name.clone()))?,
            None => self.scene.drop_zones.first().ok_or(SimError::NoDropZone)?,
        }
        .clone();

        let cfg = &self.config;
        let raw = oracle_detect(
            &self.scene,
            &cfg.camera,
            &cfg.image,
            &cfg.classes,
            &cfg.noise,
            &cfg.perception,
            &mut self.rng,
        )?;
        let kept = nms(
            &filter_by_confidence(&raw, cfg.perception.confidence_threshold),
            cfg.perception.nms_iou,
        );
        self.detections = kept.clone();
        self.log(EventKind::DetectionsPublished {
            raw_count: raw.len(),
            detections: kept.clone(),
        });

        let cfg = &self.config;
        let target = select_target(&kept, &class, &cfg.image.center())?.clone();
        let grasp = estimate_grasp_point(&cfg.camera, &target, self.scene.plane_height)?;
        self.log(EventKind::TargetSelected {
            detection: target,
            grasp,
            drop_zone: zone.name.clone(),
        });

        let cfg = &self.config;
        let lift = cfg.control.hover_height;
        let hover = WorldPoint::new(grasp.point.x, grasp.point.y, grasp.point.z + lift);
        let drop = WorldPoint::new(
            zone.position.x,
            zone.position.y,
            self.scene.plane_height + grasp.radius + lift,
        );
        let approach = solve_ik(&cfg.arm, &hover, &self.joints)?;
        let descend = solve_ik(&cfg.arm, &grasp.point, &approach)?;
        let transit = solve_ik(&cfg.arm, &drop, &approach)?;
        Ok(PickPlan {
            drop_zone: zone.name,
            approach,
            descend,
            transit,
        })
    }

    fn start(&mut self, mut task: Task, first: PickPlacePhase) {
        self.set_phase(first);
        self.begin_segment(&mut task);
        self.task = Some(task);
    }

    fn goal_for(&self, task: &Task, phase: PickPlacePhase) -> Option<JointAngles> {
        use PickPlacePhase::*;
        match (phase, &task.pick) {
            (Home, _) => Some(self.config.home),
            (Approach | Ascend, Some(p)) => Some(p.approach),
            (Descend, Some(p)) => Some(p.descend),
            (Transit, Some(p)) => Some(p.transit),
            _ => None,
        }
    }

    fn begin_segment(&self, task: &mut Task) {
        task.segment = self.goal_for(task, self.phase).map(|goal| Segment {
            trajectory: plan_trajectory(&self.joints, &goal, self.config.control.max_joint_speed),
            t: 0.0,
        });
        task.tracker.reset();
        task.dwell = 0.0;
    }

    /// Advances the clock by `dt` and, if a task runs, the controller,
    /// actuator and phase machine by one tick.
    pub fn step(&mut self, dt: f64) -> Result<(), SimError> {
        if !(dt > 0.0) {
            return Err(ControlError::NonPositiveDt(dt).into());
        }
        self.clock += dt;
        let Some(mut task) = self.task.take() else {
            return Ok(());
        };
        task.elapsed += dt;
        match self.advance(&mut task, dt) {
            Ok(true) => {}
            Ok(false) if task.elapsed > self.config.max_task_duration => {
                self.abort(SimError::Timeout(self.config.max_task_duration));
            }
            Ok(false) => self.task = Some(task),
            Err(e) => self.abort(e),
        }
        Ok(())
    }

    /// One tick at the configured control period.
    pub fn tick(&mut self) -> Result<(), SimError> {
        self.step(self.config.control.dt)
    }

    /// Ticks until the running task ends (or its time budget runs out).
    pub fn run_until_idle(&mut self) -> Result<(), SimError> {
        while self.is_busy() {
            self.tick()?;
        }
        Ok(())
    }

    /// Returns whether the task finished.
    fn advance(&mut self, task: &mut Task, dt: f64) -> Result<bool, SimError> {
        let ctl = self.config.control;
        let (at_target, grasped) = match self.phase {
            phase if phase.is_motion() => {
                let seg = task.segment.as_mut().expect("motion phase has a segment");
                let cmd = task.tracker.command(&seg.trajectory, seg.t, &self.joints, dt)?;
                self.joints = actuator_step(
                    &self.joints,
                    &cmd,
                    dt,
                    ctl.actuator_speed_limit,
                    &self.config.arm.joint_limits,
                )?;
                seg.t += dt;
                let ee = self.end_effector();
                if let Some(h) = self.held.as_mut() {
                    h.position = ee;
                }
                let done = seg.t >= seg.trajectory.duration - 1e-9
                    && self.joints.max_distance(&seg.trajectory.end) <= ctl.at_target_tolerance;
                if !done && seg.t > seg.trajectory.duration + ctl.settle_timeout {
                    return Err(SimError::SettleTimeout { phase });
                }
                (done, false)
            }
            PickPlacePhase::Grasp => {
                self.attach()?;
                (false, true)
            }
            PickPlacePhase::Release => {
                task.dwell += dt;
                if task.dwell + 1e-9 < ctl.release_dwell {
                    return Ok(false);
                }
                task.delivered = self.held.as_ref().map(|o| o.id);
                self.set_down_held();
                (false, false)
            }
            _ => unreachable!("a task never runs in Done"),
        };
        let next = pick_place_advance(self.phase, at_target, grasped);
        if next == self.phase {
            return Ok(false);
        }
        self.set_phase(next);
        if next == PickPlacePhase::Done {
            self.finish(task);
            return Ok(true);
        }
        self.begin_segment(task);
        Ok(false)
    }

    /// Attaches the free object nearest the end effector, if within
    /// `grasp_tolerance`.
    fn attach(&mut self) -> Result<(), SimError> {
        let ee = self.end_effector();
        let nearest = self
            .scene
            .objects
            .iter()
            .enumerate()
            .map(|(i, o)| (i, o.position.distance(&ee)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let tolerance = self.config.control.grasp_tolerance;
        match nearest {
            Some((i, d)) if d <= tolerance => {
                let obj = self.scene.objects.remove(i);
                self.gripper = Gripper::Holding(obj.id);
                self.held = Some(obj);
                Ok(())
            }
            other => Err(SimError::GraspFailed {
                distance: other.map_or(f64::INFINITY, |(_, d)| d),
                tolerance,
            }),
        }
    }

    /// Puts the held object on the workbench below the end effector.
    fn set_down_held(&mut self) {
        let ee = self.end_effector();
        if let Some(mut obj) = self.held.take() {
            obj.position = WorldPoint::new(ee.x, ee.y, self.scene.plane_height + obj.radius);
            self.scene.objects.push(obj);
            self.scene.objects.sort_by_key(|o| o.id);
        }
        self.gripper = Gripper::Empty;
    }

    fn finish(&mut self, task: &Task) {
        let outcome = match &task.pick {
            None => TaskOutcome::Homed,
            Some(plan) => match task
                .delivered
                .and_then(|id| self.scene.objects.iter().find(|o| o.id == id).cloned())
            {
                Some(obj) => {
                    let outcome = TaskOutcome::Completed {
                        object_id: obj.id,
                        class: obj.class.clone(),
                        drop_zone: plan.drop_zone.clone(),
                    };
                    self.log(EventKind::PickCompleted {
                        object_id: obj.id,
                        class: obj.class,
                        drop_zone: plan.drop_zone.clone(),
                        position: obj.position,
                    });
                    outcome
                }
                None => TaskOutcome::Failed {
                    error: "GraspFailed".into(),
                    detail: "no object was delivered".into(),
                },
            },
        };
        self.last_outcome = Some(outcome);
    }

    fn record_failure(&mut self, e: &SimError) {
        self.log(EventKind::Error {
            stage: e.stage().to_string(),
            error: e.name().to_string(),
            detail: e.to_string(),
        });
        self.last_outcome = Some(TaskOutcome::Failed {
            error: e.name().to_string(),
            detail: e.to_string(),
        });
    }

    fn abort(&mut self, e: SimError) {
        self.task = None;
        self.record_failure(&e);
        self.set_down_held();
        self.set_phase(PickPlacePhase::Done);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{parse_scenario, DEMO_SCENARIO};

    fn demo() -> Simulator {
        parse_scenario(DEMO_SCENARIO).unwrap().simulator(42)
    }

    fn pick(class: &str) -> ActionRequest {
        ActionRequest::new(Verb::Pick, Some(class))
    }

    fn phase_trace(sim: &Simulator) -> Vec<(PickPlacePhase, PickPlacePhase)> {
        sim.events()
            .iter()
            .filter_map(|e| match e.kind {
                EventKind::PhaseChanged { from, to } => Some((from, to)),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn demo_pick_completes() {
        let mut sim = demo();
        sim.submit(&pick("orange"), None).unwrap();
        sim.run_until_idle().unwrap();
        let names: Vec<_> = sim.events().iter().map(|e| e.kind.name()).collect();
        assert_eq!(names.iter().filter(|n| **n == "PickCompleted").count(), 1, "{names:?}");
        assert!(matches!(sim.last_outcome(), Some(TaskOutcome::Completed { .. })));
        assert_eq!(sim.gripper(), Gripper::Empty);
        assert_eq!(sim.object_count(), 4);
        let orange = sim.scene().objects.iter().find(|o| o.class == "orange").unwrap();
        let bin = sim.scene().drop_zone("bin").unwrap().position;
        assert!(orange.position.horizontal_distance(&bin) < 0.005, "{:?}", orange.position);
        assert!(sim.clock() < 30.0, "took {}", sim.clock());
        for (from, to) in phase_trace(&sim) {
            assert!(PickPlacePhase::is_valid_transition(from, to), "{from:?} -> {to:?}");
        }
    }

    fn with_scene(edit: impl FnOnce(&mut Scene)) -> Simulator {
        let sc = parse_scenario(DEMO_SCENARIO).unwrap();
        let mut scene = sc.scene.clone();
        edit(&mut scene);
        Simulator::new(sc.config.clone(), scene, 42)
    }

    #[test]
    fn idle_step_only_advances_clock() {
        let mut sim = demo();
        let before = sim.arm_snapshot();
        sim.step(0.01).unwrap();
        let after = sim.arm_snapshot();
        assert_eq!(after.stamp, 0.01);
        assert_eq!((after.joints, after.phase, after.gripper), (before.joints, before.phase, before.gripper));
        assert_eq!(sim.scene(), demo().scene());
        assert!(sim.events().is_empty());
    }

    #[test]
    fn clock_sums_steps() {
        let mut sim = demo();
        for _ in 0..1000 {
            sim.step(0.01).unwrap();
        }
        assert!((sim.clock() - 10.0).abs() < 1e-9);
        assert_eq!(sim.step(0.0).unwrap_err().name(), "NonPositiveDt");
        assert_eq!(sim.step(-1.0).unwrap_err().name(), "NonPositiveDt");
    }

    #[test]
    fn clones_evolve_identically() {
        let mut a = demo();
        a.submit(&pick("apple"), None).unwrap();
        for _ in 0..137 {
            a.tick().unwrap();
        }
        let mut b = a.clone();
        for _ in 0..300 {
            a.tick().unwrap();
            b.tick().unwrap();
        }
        assert_eq!(a.arm_snapshot(), b.arm_snapshot());
        assert_eq!(a.events(), b.events());
    }

    #[test]
    fn unreachable_target_leaves_scene_unchanged() {
        let mut sim = with_scene(|s| {
            s.objects.retain(|o| o.class != "orange");
            s.add_object("orange", 0.42, 0.0, 0.04);
        });
        let scene_before = sim.scene().clone();
        let joints_before = sim.joints();
        let err = sim.submit(&pick("orange"), None).unwrap_err();
        assert_eq!(err.name(), "Unreachable");
        assert_eq!(sim.scene(), &scene_before);
        assert_eq!(sim.joints(), joints_before);
        assert!(!sim.is_busy());
        assert_eq!(sim.phase(), PickPlacePhase::Done);
        let last = sim.events().last().unwrap();
        assert!(matches!(&last.kind, EventKind::Error { error, stage, .. } if error == "Unreachable" && stage == "kinematics"));
    }

    #[test]
    fn empty_scene_has_nothing_to_detect() {
        let mut sim = with_scene(|s| s.objects.clear());
        let err = sim.submit(&pick("apple"), None).unwrap_err();
        assert_eq!(err.name(), "ClassNotDetected");
        assert!(matches!(sim.last_outcome(), Some(TaskOutcome::Failed { error, .. }) if error == "ClassNotDetected"));
    }

    #[test]
    fn unknown_drop_zone() {
        let mut sim = demo();
        let mut action = pick("apple");
        action.drop_zone = Some("crate".into());
        assert_eq!(sim.submit(&action, None).unwrap_err().name(), "UnknownDropZone");
    }

    #[test]
    fn busy_arm_rejects_and_stop_aborts() {
        let mut sim = demo();
        sim.submit(&pick("banana"), None).unwrap();
        let events = sim.events().len();
        assert_eq!(sim.submit(&pick("apple"), None).unwrap_err(), SimError::ArmBusy);
        assert_eq!(sim.submit(&ActionRequest::new(Verb::Home, None), None).unwrap_err(), SimError::ArmBusy);
        assert_eq!(sim.events().len(), events, "rejections leave no trace");

        // run until the banana is held, then stop
        while sim.gripper() == Gripper::Empty {
            sim.tick().unwrap();
        }
        assert_eq!(sim.object_count(), 4);
        sim.submit(&ActionRequest::new(Verb::Stop, None), None).unwrap();
        assert!(!sim.is_busy());
        assert_eq!(sim.phase(), PickPlacePhase::Done);
        assert_eq!(sim.gripper(), Gripper::Empty);
        assert_eq!(sim.scene().objects.len(), 4);
        assert_eq!(sim.last_outcome(), Some(&TaskOutcome::Stopped));
    }

    #[test]
    fn home_returns_to_home_pose() {
        let mut sim = demo();
        sim.submit(&pick("seed"), None).unwrap();
        for _ in 0..200 {
            sim.tick().unwrap();
        }
        sim.submit(&ActionRequest::new(Verb::Stop, None), None).unwrap();
        let away = sim.joints();
        assert!(away.max_distance(&sim.config().home) > 0.01);
        sim.submit(&ActionRequest::new(Verb::Home, None), None).unwrap();
        sim.run_until_idle().unwrap();
        assert!(sim.joints().max_distance(&sim.config().home) <= sim.config().control.at_target_tolerance);
        assert_eq!(sim.last_outcome(), Some(&TaskOutcome::Homed));
        let trace = phase_trace(&sim);
        assert_eq!(&trace[trace.len() - 2..], &[(PickPlacePhase::Done, PickPlacePhase::Home), (PickPlacePhase::Home, PickPlacePhase::Done)]);
    }

    #[test]
    fn objects_are_conserved_every_tick() {
        let mut sim = demo();
        for class in ["orange", "apple", "seed", "banana"] {
            sim.submit(&pick(class), None).unwrap();
            while sim.is_busy() {
                sim.tick().unwrap();
                assert_eq!(sim.object_count(), 4);
                if let Gripper::Holding(id) = sim.gripper() {
                    assert!(sim.scene().objects.iter().all(|o| o.id != id));
                    assert_eq!(sim.held().unwrap().id, id);
                }
            }
            assert!(matches!(sim.last_outcome(), Some(TaskOutcome::Completed { class: c, .. }) if c == class));
        }
        let mut stamps = sim.events().iter().map(|e| e.stamp);
        let mut prev = stamps.next().unwrap();
        for s in stamps {
            assert!(s >= prev);
            prev = s;
        }
    }

    #[test]
    fn grasp_outside_tolerance_fails() {
        let mut sim = demo();
        sim.config.control.grasp_tolerance = 1e-9;
        sim.submit(&pick("orange"), None).unwrap();
        sim.run_until_idle().unwrap();
        // noise-free tracking still leaves a sub-millimetre residual
        match sim.last_outcome() {
            Some(TaskOutcome::Failed { error, .. }) => assert_eq!(error, "GraspFailed"),
            Some(TaskOutcome::Completed { .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(sim.object_count(), 4);
        assert_eq!(sim.phase(), PickPlacePhase::Done);
    }
}
