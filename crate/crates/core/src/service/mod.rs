//! HTTP and websocket front end over a single simulator.
//!
//! One tick driver task owns the simulator. Readers get the latest snapshot
//! through a watch channel, and commands and scenario loads are serialized
//! through the driver's inbox. Telemetry fans out on a broadcast channel to
//! any number of stream subscribers. A subscriber that falls behind is
//! disconnected rather than slowing the driver down.
//!
//! There is no authentication; bind to a trusted network only.

mod driver;

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use axum::extract::ws::rejection::WebSocketUpgradeRejection;
use axum::extract::ws::{CloseFrame, Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::{broadcast, mpsc, oneshot, watch};
use tokio::task::JoinHandle;
use tower_http::services::ServeDir;

use crate::command::{ActionRequest, CommandMatch};
use crate::detection::Detection;
use crate::simulator::{parse_scenario, ArmSnapshot, ScenarioError, SceneSnapshot};
use driver::{Driver, DriverMsg};

/// Telemetry channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topic {
    ArmState = 0,
    Detections = 1,
    Events = 2,
    Scene = 3,
}

impl Topic {
    pub const ALL: [Topic; 4] = [Topic::ArmState, Topic::Detections, Topic::Events, Topic::Scene];

    pub fn as_str(self) -> &'static str {
        match self {
            Topic::ArmState => "arm_state",
            Topic::Detections => "detections",
            Topic::Events => "events",
            Topic::Scene => "scene",
        }
    }
}

impl fmt::Display for Topic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Topic {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Topic::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown topic {s:?}"))
    }
}

/// Parses a comma-separated topic list; empty means every topic.
pub fn parse_topics(list: Option<&str>) -> Result<BTreeSet<Topic>, String> {
    let names: Vec<&str> = list
        .unwrap_or("")
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if names.is_empty() {
        return Ok(Topic::ALL.into_iter().collect());
    }
    names.into_iter().map(Topic::from_str).collect()
}

/// One stream frame. `seq` counts from 1 per topic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicMessage<P> {
    pub topic: Topic,
    pub seq: u64,
    pub stamp: f64,
    pub payload: P,
}

/// A frame serialized once for all subscribers.
#[derive(Debug)]
pub(crate) struct Published {
    topic: Topic,
    text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionsSnapshot {
    pub stamp: f64,
    pub detections: Vec<Detection>,
}

/// Everything readers may query, captured at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub scene: SceneSnapshot,
    pub arm: ArmSnapshot,
    pub detections: DetectionsSnapshot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommandSubmission {
    pub text: String,
    /// Candidate count, 3 when omitted.
    #[serde(default)]
    pub n_best: Option<usize>,
}

/// A pipeline stage that failed right at submission (detection, target
/// selection or IK). The failure is also logged as an Error event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub error: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandResponse {
    pub accepted: bool,
    pub action: ActionRequest,
    pub candidates: Vec<CommandMatch>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<Failure>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadSummary {
    pub loaded: bool,
    pub objects: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<CommandMatch>>,
}

/// An error response: status plus `{error, detail[, candidates]}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: &str, detail: String, candidates: Option<Vec<CommandMatch>>) -> Self {
        Self {
            status,
            body: ErrorBody {
                error: error.to_string(),
                detail,
                candidates,
            },
        }
    }

    fn bad_request(error: &str, detail: String) -> Self {
        Self::new(StatusCode::BAD_REQUEST, error, detail, None)
    }

    fn unprocessable(error: &str, detail: String, candidates: Vec<CommandMatch>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, error, detail, Some(candidates))
    }

    fn busy(candidates: Vec<CommandMatch>) -> Self {
        Self::new(
            StatusCode::CONFLICT,
            "ArmBusy",
            "a command is already executing".into(),
            Some(candidates),
        )
    }

    fn no_scenario() -> Self {
        Self::new(
            StatusCode::CONFLICT,
            "NoScenarioLoaded",
            "load a scenario first".into(),
            None,
        )
    }

    fn unavailable() -> Self {
        Self::new(
            StatusCode::SERVICE_UNAVAILABLE,
            "DriverStopped",
            "the simulation driver is not running".into(),
            None,
        )
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    /// Simulated seconds per wall-clock second.
    pub time_scale: f64,
    /// Upper bound on arm_state and scene frames per second.
    pub telemetry_rate: f64,
    /// Frames a subscriber may fall behind before it is disconnected.
    pub stream_capacity: usize,
    /// Static files served under `/` (the operator console build).
    pub console_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            time_scale: 1.0,
            telemetry_rate: 30.0,
            stream_capacity: 1024,
            console_dir: None,
        }
    }
}

#[derive(Clone)]
struct AppState {
    inbox: mpsc::Sender<DriverMsg>,
    snapshot: watch::Receiver<Option<Arc<Snapshot>>>,
    hub: broadcast::Sender<Arc<Published>>,
}

/// A running driver plus the router that fronts it.
pub struct Service {
    router: Router,
    driver: JoinHandle<()>,
}

impl Service {
    /// Spawns the tick driver on the current runtime, optionally preloaded
    /// with a scenario.
    pub fn start(config: ServiceConfig, scenario: Option<&str>) -> Result<Self, ScenarioError> {
        let initial = scenario.map(parse_scenario).transpose()?;
        let (snapshot_tx, snapshot_rx) = watch::channel(None);
        let (hub, _) = broadcast::channel(config.stream_capacity.max(1));
        let (inbox, rx) = mpsc::channel(16);
        let mut driver = Driver::new(config.clone(), snapshot_tx, hub.clone());
        if let Some(s) = &initial {
            driver.load(s);
        }
        let handle = tokio::spawn(driver.run(rx));

        let state = AppState {
            inbox,
            snapshot: snapshot_rx,
            hub,
        };
        let mut router = Router::new()
            .route("/api/v1/scene", get(get_scene))
            .route("/api/v1/arm", get(get_arm))
            .route("/api/v1/detections", get(get_detections))
            .route("/api/v1/command", post(post_command))
            .route("/api/v1/scenario", post(post_scenario))
            .route("/api/v1/stream", get(stream))
            .with_state(state);
        if let Some(dir) = &config.console_dir {
            router = router.fallback_service(ServeDir::new(dir));
        }
        Ok(Self {
            router,
            driver: handle,
        })
    }

    pub fn router(&self) -> Router {
        self.router.clone()
    }

    /// Serves on `listener` until the connection future ends.
    pub async fn serve(self, listener: tokio::net::TcpListener) -> std::io::Result<()> {
        let result = axum::serve(listener, self.router.clone()).await;
        self.driver.abort();
        result
    }
}

impl Drop for Service {
    fn drop(&mut self) {
        self.driver.abort();
    }
}

fn current(state: &AppState) -> Result<Arc<Snapshot>, ApiError> {
    state.snapshot.borrow().clone().ok_or_else(ApiError::no_scenario)
}

async fn get_scene(State(state): State<AppState>) -> Result<Json<SceneSnapshot>, ApiError> {
    Ok(Json(current(&state)?.scene.clone()))
}

async fn get_arm(State(state): State<AppState>) -> Result<Json<ArmSnapshot>, ApiError> {
    Ok(Json(current(&state)?.arm.clone()))
}

async fn get_detections(State(state): State<AppState>) -> Result<Json<DetectionsSnapshot>, ApiError> {
    Ok(Json(current(&state)?.detections.clone()))
}

async fn ask<T>(state: &AppState, make: impl FnOnce(oneshot::Sender<Result<T, ApiError>>) -> DriverMsg) -> Result<T, ApiError> {
    let (tx, rx) = oneshot::channel();
    state.inbox.send(make(tx)).await.map_err(|_| ApiError::unavailable())?;
    rx.await.map_err(|_| ApiError::unavailable())?
}

async fn post_command(
    State(state): State<AppState>,
    Json(submission): Json<CommandSubmission>,
) -> Result<Json<CommandResponse>, ApiError> {
    ask(&state, |reply| DriverMsg::Command { submission, reply }).await.map(Json)
}

async fn post_scenario(State(state): State<AppState>, text: String) -> Result<Json<LoadSummary>, ApiError> {
    ask(&state, |reply| DriverMsg::Load { text, reply }).await.map(Json)
}

#[derive(Debug, Deserialize)]
struct StreamQuery {
    topics: Option<String>,
}

async fn stream(
    State(state): State<AppState>,
    Query(query): Query<StreamQuery>,
    ws: Result<WebSocketUpgrade, WebSocketUpgradeRejection>,
) -> Result<Response, ApiError> {
    let topics = parse_topics(query.topics.as_deref())
        .map_err(|detail| ApiError::bad_request("UnknownTopic", detail))?;
    let ws = match ws {
        Ok(ws) => ws,
        Err(rejection) => return Ok(rejection.into_response()),
    };
    // subscribe before the upgrade so no frame published meanwhile is lost
    let rx = state.hub.subscribe();
    Ok(ws.on_upgrade(move |socket| pump(socket, rx, topics)))
}

/// Close code sent to a subscriber that fell behind.
pub const SLOW_CONSUMER_CLOSE_CODE: u16 = 1008;

async fn pump(mut socket: WebSocket, mut rx: broadcast::Receiver<Arc<Published>>, topics: BTreeSet<Topic>) {
    loop {
        tokio::select! {
            frame = rx.recv() => match frame {
                Ok(p) => {
                    if topics.contains(&p.topic) && socket.send(Message::Text(p.text.clone().into())).await.is_err() {
                        return;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(missed)) => {
                    let _ = socket
                        .send(Message::Close(Some(CloseFrame {
                            code: SLOW_CONSUMER_CLOSE_CODE,
                            reason: format!("SlowConsumer: {missed} frames dropped").into(),
                        })))
                        .await;
                    return;
                }
                Err(broadcast::error::RecvError::Closed) => {
                    let _ = socket.send(Message::Close(None)).await;
                    return;
                }
            },
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Close(_))) | Some(Err(_)) | None => return,
                Some(Ok(_)) => {}
            },
        }
    }
}
