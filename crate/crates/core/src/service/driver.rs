use std::sync::Arc;
use std::time::Duration;

use serde::Serialize;
use tokio::sync::{broadcast, mpsc, oneshot, watch};
use tokio::time::{self, Instant, MissedTickBehavior};

use super::{
    ApiError, CommandResponse, CommandSubmission, DetectionsSnapshot, LoadSummary, Published,
    ServiceConfig, Snapshot, Topic, TopicMessage,
};
use crate::command::{map_to_action, match_utterance, Utterance, Verb, Vocabulary};
use crate::simulator::{parse_scenario, EventKind, Scenario, SceneSnapshot, Simulator};

pub(crate) enum DriverMsg {
    Load {
        text: String,
        reply: oneshot::Sender<Result<LoadSummary, ApiError>>,
    },
    Command {
        submission: CommandSubmission,
        reply: oneshot::Sender<Result<CommandResponse, ApiError>>,
    },
}

struct Loaded {
    sim: Simulator,
    vocabulary: Vocabulary,
}

/// Wall-clock period between tick batches.
const BATCH_PERIOD: Duration = Duration::from_millis(10);
/// Cap on ticks per batch, so a stalled runtime cannot trigger a burst.
const MAX_TICKS_PER_BATCH: usize = 10_000;

/// Sole owner of the simulator. Advances it in wall-clock paced batches,
/// serves load and command requests between batches, and publishes
/// snapshots and topic messages after every change.
pub(crate) struct Driver {
    loaded: Option<Loaded>,
    config: ServiceConfig,
    snapshot: watch::Sender<Option<Arc<Snapshot>>>,
    hub: broadcast::Sender<Arc<Published>>,
    seq: [u64; 4],
    published_events: usize,
    last_publish: [Option<Instant>; 4],
    last_scene: Option<SceneSnapshot>,
    pending_scene: bool,
    tick_budget: f64,
}

impl Driver {
    pub(crate) fn new(
        config: ServiceConfig,
        snapshot: watch::Sender<Option<Arc<Snapshot>>>,
        hub: broadcast::Sender<Arc<Published>>,
    ) -> Self {
        Self {
            loaded: None,
            config,
            snapshot,
            hub,
            seq: [0; 4],
            published_events: 0,
            last_publish: [None; 4],
            last_scene: None,
            pending_scene: false,
            tick_budget: 0.0,
        }
    }

    pub(crate) fn load(&mut self, scenario: &Scenario) {
        // keep stamps non-decreasing across reloads
        let clock = self.loaded.as_ref().map_or(0.0, |l| l.sim.clock());
        self.loaded = Some(Loaded {
            sim: scenario.simulator(scenario.seed).starting_at(clock),
            vocabulary: scenario.vocabulary.clone(),
        });
        self.published_events = 0;
        self.last_scene = None;
        self.pending_scene = true;
        self.tick_budget = 0.0;
        self.publish();
    }

    pub(crate) async fn run(mut self, mut rx: mpsc::Receiver<DriverMsg>) {
        let mut interval = time::interval(BATCH_PERIOD);
        interval.set_missed_tick_behavior(MissedTickBehavior::Delay);
        loop {
            tokio::select! {
                msg = rx.recv() => match msg {
                    Some(msg) => self.handle(msg),
                    None => break,
                },
                _ = interval.tick() => self.advance(),
            }
        }
    }

    fn handle(&mut self, msg: DriverMsg) {
        match msg {
            DriverMsg::Load { text, reply } => {
                let result = parse_scenario(&text)
                    .map(|s| {
                        self.load(&s);
                        LoadSummary {
                            loaded: true,
                            objects: s.scene.objects.len(),
                            seed: s.seed,
                        }
                    })
                    .map_err(|e| ApiError::bad_request(e.name(), e.to_string()));
                let _ = reply.send(result);
            }
            DriverMsg::Command { submission, reply } => {
                let result = self.command(&submission);
                self.publish();
                let _ = reply.send(result);
            }
        }
    }

    /// Matches, validates and submits in one step; a rejected command leaves
    /// the simulator untouched.
    fn command(&mut self, sub: &CommandSubmission) -> Result<CommandResponse, ApiError> {
        let loaded = self.loaded.as_mut().ok_or_else(ApiError::no_scenario)?;
        let n_best = sub.n_best.unwrap_or(3);
        if sub.text.trim().is_empty() || n_best == 0 {
            return Err(ApiError::bad_request(
                "InvalidSubmission",
                "text must be nonempty and n_best at least 1".into(),
            ));
        }
        let candidates = match_utterance(&loaded.vocabulary, &Utterance::from_text(&sub.text), n_best)
            .map_err(|e| ApiError::unprocessable(e.name(), e.to_string(), Vec::new()))?;
        let mut classes = loaded.sim.scene().classes();
        if let Some(held) = loaded.sim.held() {
            classes.insert(held.class.clone());
        }
        let action = map_to_action(&candidates[0], &classes)
            .map_err(|e| ApiError::unprocessable(e.name(), e.to_string(), candidates.clone()))?;
        if loaded.sim.is_busy() && action.verb != Verb::Stop {
            return Err(ApiError::busy(candidates));
        }
        let failure = loaded
            .sim
            .submit(&action, Some(&sub.text))
            .err()
            .map(|e| super::Failure {
                error: e.name().to_string(),
                detail: e.to_string(),
            });
        Ok(CommandResponse {
            accepted: true,
            action,
            candidates,
            failure,
        })
    }

    fn advance(&mut self) {
        let Some(loaded) = self.loaded.as_mut() else {
            return;
        };
        let dt = loaded.sim.config().control.dt;
        self.tick_budget += self.config.time_scale * BATCH_PERIOD.as_secs_f64();
        let mut ticks = 0;
        while self.tick_budget >= dt && ticks < MAX_TICKS_PER_BATCH {
            loaded.sim.tick().expect("validated control period");
            self.tick_budget -= dt;
            ticks += 1;
        }
        if ticks == MAX_TICKS_PER_BATCH {
            self.tick_budget = 0.0;
        }
        if ticks > 0 {
            self.publish();
        }
    }

    fn throttled(&self, topic: Topic, now: Instant) -> bool {
        let min_gap = Duration::from_secs_f64(1.0 / self.config.telemetry_rate);
        self.last_publish[topic as usize].is_some_and(|t| now.duration_since(t) < min_gap)
    }

    fn send<T: Serialize>(&mut self, topic: Topic, stamp: f64, payload: &T, now: Instant) {
        let i = topic as usize;
        self.seq[i] += 1;
        self.last_publish[i] = Some(now);
        let msg = TopicMessage {
            topic,
            seq: self.seq[i],
            stamp,
            payload,
        };
        let text = serde_json::to_string(&msg).expect("topic payloads serialize");
        // no receivers is fine
        let _ = self.hub.send(Arc::new(Published { topic, text }));
    }

    /// Swaps in a fresh snapshot and fans out what changed. Events go out
    /// immediately; scene and arm state respect the telemetry rate, and a
    /// throttled scene change is sent with a later batch.
    fn publish(&mut self) {
        let Some(loaded) = self.loaded.as_ref() else {
            return;
        };
        let sim = &loaded.sim;
        let now = Instant::now();
        let snap = Arc::new(Snapshot {
            scene: sim.scene_snapshot(),
            arm: sim.arm_snapshot(),
            detections: DetectionsSnapshot {
                stamp: sim.clock(),
                detections: sim.detections().to_vec(),
            },
        });
        self.snapshot.send_replace(Some(snap.clone()));

        let new_events: Vec<_> = sim.events()[self.published_events..].to_vec();
        self.published_events = sim.events().len();
        let mut detections_changed = false;
        for e in &new_events {
            detections_changed |= matches!(e.kind, EventKind::DetectionsPublished { .. });
            self.send(Topic::Events, e.stamp, e, now);
        }
        if detections_changed {
            self.send(Topic::Detections, snap.detections.stamp, &snap.detections, now);
        }

        let scene_changed = self.last_scene.as_ref().is_none_or(|s| {
            s.objects != snap.scene.objects || s.held != snap.scene.held
        });
        self.pending_scene |= scene_changed;
        if self.pending_scene && !self.throttled(Topic::Scene, now) {
            self.send(Topic::Scene, snap.scene.stamp, &snap.scene, now);
            self.last_scene = Some(snap.scene.clone());
            self.pending_scene = false;
        }
        if !self.throttled(Topic::ArmState, now) {
            self.send(Topic::ArmState, snap.arm.stamp, &snap.arm, now);
        }
    }
}
