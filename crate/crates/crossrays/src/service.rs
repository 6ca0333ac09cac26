//! Session service: interactive clients drive the technique and trial state
//! machines over a WebSocket, one JSON message per text frame.
//!
//! [`Connection`] holds all protocol logic and is usable without a socket;
//! [`serve`] only moves text between sockets and connections.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use crossrays_core::geom::Ray;
use crossrays_core::session::{Hud, TrialSession};
use crossrays_core::tasks::{TaskKind, TrialPhase, TrialSpec};
use crossrays_core::techniques::{InputFrame, RenderState, TechniqueConfig, TechniqueKind};
use futures_util::{SinkExt, StreamExt};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tokio_tungstenite::tungstenite::Message;

use crate::log::{LogLine, LogWriter};

pub const DEFAULT_MAX_SESSIONS: usize = 64;
pub const LOG_DIR_ENV: &str = "CROSSRAYS_LOG_DIR";
pub const LOG_FILE_NAME: &str = "sessions.jsonl";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MsgIn {
    CreateSession {
        technique: TechniqueKind,
        task: TaskKind,
        distance_m: f64,
        seed: u64,
        #[serde(default)]
        participant: u32,
        #[serde(default)]
        yaw_side: Option<i8>,
        /// Clock value at which the trial starts; defaults to the first
        /// frame's timestamp.
        #[serde(default)]
        start_t: Option<f64>,
    },
    Frame {
        #[serde(default)]
        session_id: Option<u64>,
        frame: InputFrame,
    },
    EndSession {
        #[serde(default)]
        session_id: Option<u64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MsgOut {
    SessionCreated { session_id: u64, technique: TechniqueKind, task: TaskKind, distance_m: f64, target: [f64; 3] },
    Render { session_id: u64, render: RenderState, phase: TrialPhase, hud: Hud },
    TrialDone { session_id: u64, record: LogLine },
    SessionEnded { session_id: u64 },
    Error { message: String },
}

impl MsgOut {
    fn error(message: impl Into<String>) -> Self {
        MsgOut::Error { message: message.into() }
    }
}

pub struct ServiceConfig {
    pub max_sessions: usize,
    pub log_dir: Option<PathBuf>,
    pub eye_height: f64,
    pub techniques: TechniqueConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            max_sessions: DEFAULT_MAX_SESSIONS,
            log_dir: None,
            eye_height: 1.7,
            techniques: TechniqueConfig::default(),
        }
    }
}

impl ServiceConfig {
    /// `CROSSRAYS_LOG_DIR`, when set and non-empty, replaces `log_dir`.
    pub fn with_env_log_dir(mut self) -> Self {
        if let Some(dir) = std::env::var_os(LOG_DIR_ENV).filter(|d| !d.is_empty()) {
            self.log_dir = Some(dir.into());
        }
        self
    }
}

/// State shared by every connection.
pub struct Hub {
    config: ServiceConfig,
    active: AtomicUsize,
    next_id: AtomicU64,
    log: Option<Mutex<LogWriter<BufWriter<File>>>>,
}

impl Hub {
    pub fn new(config: ServiceConfig) -> std::io::Result<Arc<Self>> {
        let log = match &config.log_dir {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                Some(Mutex::new(LogWriter::append_to(&dir.join(LOG_FILE_NAME))?))
            }
            None => None,
        };
        Ok(Arc::new(Self { config, active: AtomicUsize::new(0), next_id: AtomicU64::new(1), log }))
    }

    pub fn active_sessions(&self) -> usize {
        self.active.load(Ordering::SeqCst)
    }

    fn try_reserve(&self) -> bool {
        self.active
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| (n < self.config.max_sessions).then_some(n + 1))
            .is_ok()
    }

    fn release(&self) {
        self.active.fetch_sub(1, Ordering::SeqCst);
    }

    fn persist(&self, line: &LogLine) -> Result<(), String> {
        let Some(log) = &self.log else { return Ok(()) };
        let mut w = log.lock().map_err(|_| "log writer poisoned".to_string())?;
        let rec = line.clone().into();
        w.write(&rec).and_then(|_| w.flush()).map_err(|e| format!("log write failed: {e}"))
    }
}

struct Live {
    spec: TrialSpec,
    participant: u32,
    seed: u64,
    start_t: Option<f64>,
    session: Option<TrialSession>,
    last_t: Option<f64>,
}

/// Sessions owned by one client. Dropping the connection releases them.
pub struct Connection {
    hub: Arc<Hub>,
    sessions: BTreeMap<u64, Live>,
}

impl Drop for Connection {
    fn drop(&mut self) {
        for _ in 0..self.sessions.len() {
            self.hub.release();
        }
    }
}

/// Checks a wire ray. Directions already unit length to 1e-12 are kept
/// bit-for-bit; others are normalized.
fn sanitize_ray(r: Ray) -> Result<Ray, String> {
    if !r.origin.is_finite() || !r.dir.is_finite() {
        return Err("ray has non-finite components".into());
    }
    let n = r.dir.norm();
    if n == 0.0 {
        return Err("ray direction is zero".into());
    }
    if (n - 1.0).abs() > 1e-12 {
        return Ok(Ray { origin: r.origin, dir: r.dir * (1.0 / n) });
    }
    Ok(r)
}

fn sanitize_frame(f: InputFrame) -> Result<InputFrame, String> {
    if !f.t.is_finite() || !f.joystick_y.is_finite() {
        return Err("frame has non-finite fields".into());
    }
    Ok(InputFrame { dominant: sanitize_ray(f.dominant)?, nondominant: sanitize_ray(f.nondominant)?, ..f })
}

impl Connection {
    pub fn new(hub: Arc<Hub>) -> Self {
        Self { hub, sessions: BTreeMap::new() }
    }

    pub fn session_count(&self) -> usize {
        self.sessions.len()
    }

    /// Handles one text message. Malformed input yields an error message
    /// and leaves every session untouched.
    pub fn handle_text(&mut self, text: &str) -> Vec<MsgOut> {
        match serde_json::from_str::<MsgIn>(text) {
            Ok(msg) => self.handle(msg),
            Err(e) => vec![MsgOut::error(format!("malformed message: {e}"))],
        }
    }

    pub fn handle(&mut self, msg: MsgIn) -> Vec<MsgOut> {
        match msg {
            MsgIn::CreateSession { technique, task, distance_m, seed, participant, yaw_side, start_t } => {
                vec![self.create(technique, task, distance_m, seed, participant, yaw_side, start_t)]
            }
            MsgIn::Frame { session_id, frame } => self.frame(session_id, frame),
            MsgIn::EndSession { session_id } => match self.resolve(session_id) {
                Ok(id) => {
                    self.sessions.remove(&id);
                    self.hub.release();
                    vec![MsgOut::SessionEnded { session_id: id }]
                }
                Err(e) => vec![MsgOut::error(e)],
            },
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn create(
        &mut self,
        technique: TechniqueKind,
        task: TaskKind,
        distance_m: f64,
        seed: u64,
        participant: u32,
        yaw_side: Option<i8>,
        start_t: Option<f64>,
    ) -> MsgOut {
        if !(distance_m.is_finite() && distance_m > 0.0) {
            return MsgOut::error("distance_m must be positive");
        }
        if start_t.is_some_and(|t| !t.is_finite()) {
            return MsgOut::error("start_t must be finite");
        }
        if !self.hub.try_reserve() {
            return MsgOut::error(format!("session limit reached ({})", self.hub.config.max_sessions));
        }
        let spec = TrialSpec::new(task, technique, distance_m, yaw_side.unwrap_or(1), 0, self.hub.config.eye_height);
        let id = self.hub.next_id.fetch_add(1, Ordering::SeqCst);
        let session = start_t.map(|t| TrialSession::new(spec, participant, seed, t, self.hub.config.techniques));
        self.sessions.insert(id, Live { spec, participant, seed, start_t, session, last_t: None });
        MsgOut::SessionCreated { session_id: id, technique, task, distance_m, target: spec.target.to_array() }
    }

    fn resolve(&self, id: Option<u64>) -> Result<u64, String> {
        match id {
            Some(id) if self.sessions.contains_key(&id) => Ok(id),
            Some(id) => Err(format!("no session {id}")),
            None => match self.sessions.len() {
                0 => Err("no session".into()),
                1 => Ok(*self.sessions.keys().next().expect("one session")),
                _ => Err("session_id required with several open sessions".into()),
            },
        }
    }

    fn frame(&mut self, id: Option<u64>, frame: InputFrame) -> Vec<MsgOut> {
        let id = match self.resolve(id) {
            Ok(id) => id,
            Err(e) => return vec![MsgOut::error(e)],
        };
        let frame = match sanitize_frame(frame) {
            Ok(f) => f,
            Err(e) => return vec![MsgOut::error(e)],
        };
        let techniques = self.hub.config.techniques;
        let live = self.sessions.get_mut(&id).expect("resolved");
        if live.last_t.is_some_and(|t| frame.t < t) {
            return vec![MsgOut::error(format!("frame time {} precedes {}", frame.t, live.last_t.unwrap_or(0.0)))];
        }
        let session = live.session.get_or_insert_with(|| {
            TrialSession::new(live.spec, live.participant, live.seed, live.start_t.unwrap_or(frame.t), techniques)
        });
        if session.is_done() {
            return vec![MsgOut::error("trial already finished")];
        }
        live.last_t = Some(frame.t);
        let out = session.advance(&frame);
        let mut msgs = vec![MsgOut::Render { session_id: id, render: out.render, phase: out.phase, hud: out.hud }];
        if let Some(rec) = out.record {
            let line = LogLine::from(&rec);
            if let Err(e) = self.hub.persist(&line) {
                msgs.push(MsgOut::error(e));
            }
            msgs.push(MsgOut::TrialDone { session_id: id, record: line });
        }
        msgs
    }
}

fn encode(msg: &MsgOut) -> String {
    serde_json::to_string(msg).expect("outgoing messages always serialize")
}

async fn client(hub: Arc<Hub>, stream: tokio::net::TcpStream) {
    let Ok(ws) = tokio_tungstenite::accept_async(stream).await else { return };
    let (mut tx, mut rx) = ws.split();
    let mut conn = Connection::new(hub);
    while let Some(Ok(msg)) = rx.next().await {
        let replies = match msg {
            Message::Text(text) => conn.handle_text(text.as_str()),
            Message::Binary(_) => vec![MsgOut::error("expected a text message")],
            Message::Close(_) => break,
            _ => continue,
        };
        for r in replies {
            if tx.send(Message::text(encode(&r))).await.is_err() {
                return;
            }
        }
    }
}

/// Binds `addr` and serves until the task is dropped.
pub async fn serve(addr: SocketAddr, hub: Arc<Hub>) -> std::io::Result<()> {
    let listener = TcpListener::bind(addr).await?;
    serve_on(listener, hub).await
}

pub async fn serve_on(listener: TcpListener, hub: Arc<Hub>) -> std::io::Result<()> {
    loop {
        let (stream, _) = listener.accept().await?;
        tokio::spawn(client(hub.clone(), stream));
    }
}
