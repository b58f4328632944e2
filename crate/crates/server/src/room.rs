//! The room owner: one task per room holds the facilitator state and the log
//! file, and handles admissions, posts, leaves and ticks strictly in order.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use rollingchat_core::chatcore::{log_path, replay_final, EventLog, LogError, Millis, RoomEvent, RoomState};
use rollingchat_core::facilitator::{Facilitator, Transition};
use tokio::sync::{mpsc, oneshot};
use tokio::task::JoinHandle;
use tokio::time::MissedTickBehavior;

use crate::clock::Clock;
use crate::protocol::{ErrorCode, ServerFrame};
use crate::ServerError;

pub const ROOM_ID: &str = "main";
const MAX_NAME_CHARS: usize = 64;

pub type FrameSender = mpsc::UnboundedSender<ServerFrame>;

#[derive(Debug, Clone)]
pub struct RoomConfig {
    pub activity: String,
    pub log_dir: PathBuf,
    /// Facilitator ticks per second of room time.
    pub tick_hz: f64,
    pub max_room_size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdmitError {
    MalformedHello(String),
    RoomFull(usize),
}

impl AdmitError {
    pub fn to_frame(&self, ts: Millis) -> ServerFrame {
        match self {
            AdmitError::MalformedHello(m) => ServerFrame::error(ts, ErrorCode::Malformed, m.clone()),
            AdmitError::RoomFull(n) => {
                ServerFrame::error(ts, ErrorCode::RoomFull, format!("room is full ({n} present)"))
            }
        }
    }
}

/// What the server holds for a room at one instant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoomSnapshot {
    pub state: RoomState,
    /// Number of events in the log when the snapshot was taken.
    pub log_len: u64,
}

enum Command {
    Admit { requested: String, tx: FrameSender, reply: oneshot::Sender<Result<String, AdmitError>> },
    Post { name: String, text: String },
    Leave { name: String },
    ConnectFail { student: String },
    Snapshot { reply: oneshot::Sender<RoomSnapshot> },
    Close { reply: oneshot::Sender<()> },
}

/// Cheap handle for talking to a room's owner task.
#[derive(Debug, Clone)]
pub struct RoomHandle {
    tx: mpsc::UnboundedSender<Command>,
    /// State rebuilt from the log at startup, before stale participants
    /// were closed out.
    pub recovered: Arc<RoomState>,
    pub log_path: PathBuf,
}

impl RoomHandle {
    pub async fn admit(&self, requested: &str, tx: FrameSender) -> Result<String, AdmitError> {
        let (reply, rx) = oneshot::channel();
        let _ = self.tx.send(Command::Admit { requested: requested.to_owned(), tx, reply });
        rx.await.unwrap_or_else(|_| Err(AdmitError::MalformedHello("room is closed".into())))
    }

    pub fn post(&self, name: &str, text: &str) {
        let _ = self.tx.send(Command::Post { name: name.to_owned(), text: text.to_owned() });
    }

    pub fn leave(&self, name: &str) {
        let _ = self.tx.send(Command::Leave { name: name.to_owned() });
    }

    pub fn connect_fail(&self, student: &str) {
        let _ = self.tx.send(Command::ConnectFail { student: student.to_owned() });
    }

    pub async fn snapshot(&self) -> Option<RoomSnapshot> {
        let (reply, rx) = oneshot::channel();
        self.tx.send(Command::Snapshot { reply }).ok()?;
        rx.await.ok()
    }

    /// Logs a leave for everyone still present and stops the owner task.
    pub async fn close(&self) {
        let (reply, rx) = oneshot::channel();
        if self.tx.send(Command::Close { reply }).is_ok() {
            let _ = rx.await;
        }
    }
}

struct RoomActor {
    facilitator: Facilitator,
    state: RoomState,
    log: EventLog,
    members: BTreeMap<String, FrameSender>,
    clock: Arc<dyn Clock>,
    max_room_size: Option<usize>,
}

impl RoomActor {
    /// Room time, never earlier than the last logged event.
    fn now(&self) -> Millis {
        let now = self.clock.now_ms();
        self.state.last_ts.map_or(now, |last| now.max(last))
    }

    fn commit(&mut self, tr: Transition) -> Result<(), LogError> {
        for ev in &tr.events {
            self.log.append(ev)?;
            self.broadcast(ev);
        }
        Ok(())
    }

    fn broadcast(&mut self, ev: &RoomEvent) {
        let Some(frame) = ServerFrame::from_event(ev, self.state.participants.len()) else { return };
        // Presence changes go to the others; the newcomer gets a welcome instead.
        let skip = matches!(frame, ServerFrame::Presence { .. }).then_some(ev.actor.as_str());
        self.members.retain(|name, tx| Some(name.as_str()) == skip || tx.send(frame.clone()).is_ok());
    }

    fn assign_name(&self, requested: &str) -> Result<String, AdmitError> {
        let base = requested.trim();
        if base.is_empty() {
            return Err(AdmitError::MalformedHello("name must not be empty".into()));
        }
        if base.chars().count() > MAX_NAME_CHARS {
            return Err(AdmitError::MalformedHello(format!("name longer than {MAX_NAME_CHARS} characters")));
        }
        let taken = |n: &str| self.state.participants.contains(n) || n == self.facilitator.agent_name();
        if !taken(base) {
            return Ok(base.to_owned());
        }
        Ok((2..).map(|k| format!("{base}-{k}")).find(|n| !taken(n)).expect("unbounded suffixes"))
    }

    fn admit(&mut self, requested: &str, tx: FrameSender) -> Result<Result<String, AdmitError>, ServerError> {
        if let Some(max) = self.max_room_size {
            if self.state.participants.len() >= max {
                return Ok(Err(AdmitError::RoomFull(max)));
            }
        }
        let name = match self.assign_name(requested) {
            Ok(n) => n,
            Err(e) => return Ok(Err(e)),
        };
        let now = self.now();
        let tr = self.facilitator.on_join(&mut self.state, &name, now)?;
        let welcome = ServerFrame::Welcome {
            ts: now,
            room: self.facilitator.room().to_owned(),
            name: name.clone(),
            participants: self.state.participants.iter().cloned().collect(),
        };
        let _ = tx.send(welcome);
        self.members.insert(name.clone(), tx);
        self.commit(tr)?;
        Ok(Ok(name))
    }

    fn leave(&mut self, name: &str) -> Result<(), ServerError> {
        if !self.state.participants.contains(name) {
            return Ok(());
        }
        self.members.remove(name);
        let now = self.now();
        let tr = self.facilitator.on_leave(&mut self.state, name, now)?;
        self.commit(tr)?;
        Ok(())
    }

    fn handle(&mut self, cmd: Command) -> Result<bool, ServerError> {
        match cmd {
            Command::Admit { requested, tx, reply } => {
                let outcome = self.admit(&requested, tx)?;
                let _ = reply.send(outcome);
            }
            Command::Post { name, text } => {
                if self.state.participants.contains(&name) {
                    let now = self.now();
                    let tr = self.facilitator.on_message(&mut self.state, &name, &text, now)?;
                    self.commit(tr)?;
                }
            }
            Command::Leave { name } => self.leave(&name)?,
            Command::ConnectFail { student } => {
                let now = self.now();
                let ev = RoomEvent::connect_fail(now, self.facilitator.room(), self.facilitator.agent_name(), &student);
                self.state.apply(&ev, &self.facilitator.state_config())?;
                self.commit(Transition { actions: vec![], events: vec![ev] })?;
            }
            Command::Snapshot { reply } => {
                let _ = reply.send(RoomSnapshot { state: self.state.clone(), log_len: self.log.len() });
            }
            Command::Close { reply } => {
                let names: Vec<String> = self.state.participants.iter().cloned().collect();
                for name in names {
                    self.leave(&name)?;
                }
                let _ = reply.send(());
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn tick(&mut self) -> Result<(), ServerError> {
        if self.state.is_empty() {
            return Ok(());
        }
        let now = self.now();
        let tr = self.facilitator.tick(&mut self.state, now)?;
        self.commit(tr)?;
        Ok(())
    }
}

/// Opens (or recovers) the room log and starts its owner task.
///
/// Participants still present in a recovered log lost their connections
/// with the previous process; they are logged as leaving at startup.
pub fn spawn_room(
    facilitator: Facilitator,
    config: &RoomConfig,
    clock: Arc<dyn Clock>,
) -> Result<(RoomHandle, JoinHandle<Result<(), ServerError>>), ServerError> {
    let path = log_path(&config.log_dir, &config.activity, facilitator.room());
    let (log, existing) = EventLog::open(&path)?;
    let state = replay_final(&existing, &facilitator.state_config())?;
    let recovered = Arc::new(state.clone());
    let mut actor =
        RoomActor { facilitator, state, log, members: BTreeMap::new(), clock, max_room_size: config.max_room_size };
    let stale: Vec<String> = actor.state.participants.iter().cloned().collect();
    for name in stale {
        tracing::info!(%name, "closing session left open by a previous run");
        actor.leave(&name)?;
    }

    let period_s = 1.0 / (config.tick_hz * actor.clock.scale());
    let period = Duration::from_secs_f64(period_s.max(0.001));
    let (tx, mut rx) = mpsc::unbounded_channel();
    let task = tokio::spawn(async move {
        let mut ticker = tokio::time::interval(period);
        ticker.set_missed_tick_behavior(MissedTickBehavior::Skip);
        loop {
            tokio::select! {
                cmd = rx.recv() => {
                    let Some(cmd) = cmd else { return Ok(()) };
                    if !actor.handle(cmd)? {
                        return Ok(());
                    }
                }
                _ = ticker.tick() => actor.tick()?,
            }
        }
    });
    Ok((RoomHandle { tx, recovered, log_path: path }, task))
}
