use std::fmt;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::engine::{SceneSnapshot, SimConfig, Simulator, TaskOutcome};
use super::{Event, Extent, ImageSize, NoiseSpec, PerceptionConfig, Scene};
use crate::command::{
    load_vocabulary, map_to_action, match_utterance, ActionRequest, CommandMatch, Utterance, Vocabulary,
};
use crate::control::ArmControlConfig;
use crate::detection::ClassList;
use crate::geometry::{CameraExtrinsics, CameraIntrinsics, CameraModel, WorldPoint};
use crate::kinematics::{ArmGeometry, JointAngles, JointLimit, DEFAULT_LIMITS};

/// The shipped demo: four objects in reach and one "pick the orange".
pub const DEMO_SCENARIO: &str = include_str!("../../assets/demo.scn");

/// A scenario file that failed to parse or validate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioError {
    /// `line L, column C` for syntax errors, a dotted key path otherwise.
    pub location: String,
    pub message: String,
}

impl ScenarioError {
    fn at(location: impl Into<String>, message: impl fmt::Display) -> Self {
        Self {
            location: location.into(),
            message: message.to_string(),
        }
    }

    pub fn name(&self) -> &'static str {
        "ScenarioParseError"
    }
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

impl std::error::Error for ScenarioError {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    camera: CameraSection,
    arm: ArmSection,
    #[serde(default)]
    arm_control: ArmControlConfig,
    scene: SceneSection,
    #[serde(default)]
    noise: NoiseSpec,
    #[serde(default)]
    perception: PerceptionConfig,
    #[serde(default)]
    commands: CommandsSection,
    #[serde(default)]
    run: RunSection,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CameraSection {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: u32,
    height: u32,
    position: Option<[f64; 3]>,
    look_at: Option<[f64; 3]>,
    up: Option<[f64; 3]>,
    /// World-to-camera rotation, row major.
    rotation: Option<[[f64; 3]; 3]>,
    translation: Option<[f64; 3]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ArmSection {
    links: [f64; 3],
    /// Per-joint `[min, max]`, radians.
    limits: Option<[[f64; 2]; 3]>,
    #[serde(default)]
    tool_offset: f64,
    #[serde(default)]
    home: [f64; 3],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneSection {
    #[serde(default)]
    plane_height: f64,
    extent: Option<Extent>,
    classes: Option<Vec<String>>,
    #[serde(default)]
    objects: Vec<ObjectEntry>,
    #[serde(default)]
    drop_zones: Vec<ZoneEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectEntry {
    class: String,
    x: f64,
    y: f64,
    radius: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ZoneEntry {
    name: String,
    x: f64,
    y: f64,
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CommandsSection {
    utterances: Vec<String>,
    n_best: usize,
    /// Inline vocabulary text; the shipped vocabulary when absent.
    vocabulary: Option<String>,
}

impl Default for CommandsSection {
    fn default() -> Self {
        Self {
            utterances: Vec::new(),
            n_best: 3,
            vocabulary: None,
        }
    }
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunSection {
    seed: u64,
    max_duration: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: 0,
            max_duration: 60.0,
        }
    }
}

/// A validated scenario, ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: SimConfig,
    pub scene: Scene,
    pub vocabulary: Vocabulary,
    pub utterances: Vec<String>,
    pub n_best: usize,
    pub seed: u64,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

fn camera_from(c: &CameraSection) -> Result<(CameraModel, ImageSize), ScenarioError> {
    let k = CameraIntrinsics::new(c.fx, c.fy, c.cx, c.cy).map_err(|e| ScenarioError::at("camera", e))?;
    if c.width == 0 || c.height == 0 {
        return Err(ScenarioError::at("camera.width", "image size must be positive"));
    }
    let e = match (c.position, c.look_at, c.rotation, c.translation) {
        (Some(p), Some(t), None, None) => {
            let up = c.up.unwrap_or([0.0, 0.0, 1.0]);
            CameraExtrinsics::look_at(
                WorldPoint::new(p[0], p[1], p[2]),
                WorldPoint::new(t[0], t[1], t[2]),
                Vector3::from(up),
            )
            .map_err(|e| ScenarioError::at("camera.look_at", e))?
        }
        (None, None, Some(r), Some(t)) => {
            let r = Matrix3::from_row_slice(&r.concat());
            CameraExtrinsics::new(r, Vector3::from(t)).map_err(|e| ScenarioError::at("camera.rotation", e))?
        }
        _ => {
            return Err(ScenarioError::at(
                "camera",
                "pose needs either position + look_at or rotation + translation",
            ))
        }
    };
    Ok((
        CameraModel::new(k, e),
        ImageSize {
            width: c.width,
            height: c.height,
        },
    ))
}

/// Parses and validates a scenario file.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| {
        let location = match e.span() {
            Some(span) => {
                let (line, col) = line_col(text, span.start);
                format!("line {line}, column {col}")
            }
            None => "scenario".to_string(),
        };
        ScenarioError::at(location, e.message().trim())
    })?;

    let (camera, image) = camera_from(&file.camera)?;

    let a = &file.arm;
    let limits = a
        .limits
        .map_or(DEFAULT_LIMITS, |l| l.map(|[min, max]| JointLimit::new(min, max)));
    let arm = ArmGeometry::with_limits(a.links[0], a.links[1], a.links[2], limits)
        .and_then(|g| g.with_tool_offset(a.tool_offset))
        .map_err(|e| ScenarioError::at("arm", e))?;
    let home = JointAngles::from_array(a.home);
    if !home.within(&arm.joint_limits) {
        return Err(ScenarioError::at("arm.home", "home pose violates the joint limits"));
    }

    file.arm_control
        .validate()
        .map_err(|e| ScenarioError::at("arm_control", e))?;
    file.noise.validate().map_err(|e| ScenarioError::at("noise", e))?;
    file.perception
        .validate()
        .map_err(|e| ScenarioError::at("perception", e))?;

    let classes = match &file.scene.classes {
        Some(names) => ClassList::new(names).map_err(|e| ScenarioError::at("scene.classes", e))?,
        None => ClassList::default(),
    };
    let s = &file.scene;
    let mut scene = Scene::new(s.plane_height, s.extent.unwrap_or_default());
    for (i, o) in s.objects.iter().enumerate() {
        let at = |field: &str| format!("scene.objects[{i}].{field}");
        if classes.id(&o.class).is_none() {
            return Err(ScenarioError::at(at("class"), format!("unknown class {:?}", o.class)));
        }
        if !(o.radius > 0.0) || !o.radius.is_finite() {
            return Err(ScenarioError::at(at("radius"), "radius must be positive"));
        }
        if !scene.extent.contains(&WorldPoint::new(o.x, o.y, 0.0)) {
            return Err(ScenarioError::at(at("x"), "object lies outside the workbench extent"));
        }
        scene.add_object(&o.class, o.x, o.y, o.radius);
    }
    for (i, z) in s.drop_zones.iter().enumerate() {
        if scene.drop_zone(&z.name).is_some() {
            return Err(ScenarioError::at(
                format!("scene.drop_zones[{i}].name"),
                format!("duplicate drop zone {:?}", z.name),
            ));
        }
        if !scene.extent.contains(&WorldPoint::new(z.x, z.y, 0.0)) {
            return Err(ScenarioError::at(
                format!("scene.drop_zones[{i}].x"),
                "drop zone lies outside the workbench extent",
            ));
        }
        scene.add_drop_zone(&z.name, z.x, z.y);
    }

    let vocabulary = match &file.commands.vocabulary {
        Some(text) => load_vocabulary(text).map_err(|e| ScenarioError::at("commands.vocabulary", e))?,
        None => Vocabulary::default_vocabulary(),
    };
    if file.commands.n_best == 0 {
        return Err(ScenarioError::at("commands.n_best", "must be at least 1"));
    }
    if !(file.run.max_duration > 0.0) {
        return Err(ScenarioError::at("run.max_duration", "must be positive"));
    }

    Ok(Scenario {
        config: SimConfig {
            camera,
            image,
            arm,
            control: file.arm_control,
            noise: file.noise,
            perception: file.perception,
            classes,
            home,
            max_task_duration: file.run.max_duration,
        },
        scene,
        vocabulary,
        utterances: file.commands.utterances,
        n_best: file.commands.n_best,
        seed: file.run.seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeStatus {
    /// The action ran to the end (including homing and stop).
    Completed,
    /// Matching or scene validation refused the utterance.
    Rejected,
    /// The action was accepted but a pipeline stage failed.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandOutcome {
    pub utterance: String,
    pub status: OutcomeStatus,
    pub candidates: Vec<CommandMatch>,
    pub action: Option<ActionRequest>,
    pub error: Option<String>,
    pub detail: Option<String>,
    pub started: f64,
    pub finished: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub seed: u64,
    pub events: Vec<Event>,
    pub outcomes: Vec<CommandOutcome>,
    pub final_scene: SceneSnapshot,
}

impl ScenarioReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl Scenario {
    pub fn simulator(&self, seed: u64) -> Simulator {
        Simulator::new(self.config.clone(), self.scene.clone(), seed)
    }

    /// Executes the scripted utterances in order. Failures are recorded in
    /// the report and never stop the run.
    pub fn run(&self, seed: Option<u64>) -> ScenarioReport {
        let seed = seed.unwrap_or(self.seed);
        let mut sim = self.simulator(seed);
        let mut outcomes = Vec::with_capacity(self.utterances.len());
        for text in &self.utterances {
            outcomes.push(execute_utterance(&mut sim, &self.vocabulary, text, self.n_best));
        }
        ScenarioReport {
            seed,
            events: sim.events().to_vec(),
            outcomes,
            final_scene: sim.scene_snapshot(),
        }
    }
}

/// Matches, validates and runs one utterance to completion on an idle
/// simulator.
pub(crate) fn execute_utterance(
    sim: &mut Simulator,
    vocab: &Vocabulary,
    text: &str,
    n_best: usize,
) -> CommandOutcome {
    let started = sim.clock();
    let mut outcome = CommandOutcome {
        utterance: text.to_string(),
        status: OutcomeStatus::Rejected,
        candidates: Vec::new(),
        action: None,
        error: None,
        detail: None,
        started,
        finished: started,
    };
    let reject = |sim: &mut Simulator, outcome: &mut CommandOutcome, name: &str, detail: String| {
        sim.log_error("command", name, &detail);
        outcome.error = Some(name.to_string());
        outcome.detail = Some(detail);
    };
    let candidates = match match_utterance(vocab, &Utterance::from_text(text), n_best) {
        Ok(c) => c,
        Err(e) => {
            reject(sim, &mut outcome, e.name(), e.to_string());
            return outcome;
        }
    };
    outcome.candidates = candidates.clone();
    let action = match map_to_action(&candidates[0], &sim.scene().classes()) {
        Ok(a) => a,
        Err(e) => {
            reject(sim, &mut outcome, e.name(), e.to_string());
            return outcome;
        }
    };
    outcome.action = Some(action.clone());
    if let Err(e) = sim.submit(&action, Some(text)) {
        outcome.status = OutcomeStatus::Failed;
        outcome.error = Some(e.name().to_string());
        outcome.detail = Some(e.to_string());
        return outcome;
    }
    sim.run_until_idle().expect("validated control period");
    outcome.finished = sim.clock();
    match sim.last_outcome() {
        Some(TaskOutcome::Failed { error, detail }) => {
            outcome.status = OutcomeStatus::Failed;
            outcome.error = Some(error.clone());
            outcome.detail = Some(detail.clone());
        }
        _ => outcome.status = OutcomeStatus::Completed,
    }
    outcome
}

/// Parses `text` and runs it with the file's seed.
pub fn run_scenario(text: &str) -> Result<ScenarioReport, ScenarioError> {
    Ok(parse_scenario(text)?.run(None))
}
