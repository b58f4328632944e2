use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use rollingchat_core::chatcore::FacilitationScript;
use rollingchat_core::facilitator::Facilitator;
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::mpsc;
use tokio::task::JoinHandle;
use tokio_tungstenite::tungstenite::handshake::server::{Request, Response};
use tokio_tungstenite::tungstenite::protocol::WebSocketConfig;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::WebSocketStream;

use crate::clock::Clock;
use crate::protocol::{parse_client_frame, ClientFrame, ErrorCode, ServerFrame, MAX_FRAME_BYTES};
use crate::room::{spawn_room, RoomConfig, RoomHandle, ROOM_ID};
use crate::ServerError;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub bind: SocketAddr,
    pub activity: String,
    pub script: FacilitationScript,
    pub log_dir: PathBuf,
    pub tick_hz: f64,
    /// Wall time a socket has to send its hello.
    pub handshake_timeout: Duration,
    pub max_room_size: Option<usize>,
}

impl ServerConfig {
    pub fn new(bind: SocketAddr, activity: &str, script: FacilitationScript, log_dir: PathBuf) -> Self {
        ServerConfig {
            bind,
            activity: activity.to_owned(),
            script,
            log_dir,
            tick_hz: 1.0,
            handshake_timeout: Duration::from_secs(10),
            max_room_size: None,
        }
    }
}

/// A running server.
pub struct ServerHandle {
    pub local_addr: SocketAddr,
    pub room: RoomHandle,
    accept: JoinHandle<()>,
    room_task: JoinHandle<Result<(), ServerError>>,
}

impl ServerHandle {
    pub fn url(&self) -> String {
        format!("ws://{}/", self.local_addr)
    }

    /// Closes every open session in the log, then stops.
    pub async fn shutdown(self) -> Result<(), ServerError> {
        self.accept.abort();
        self.room.close().await;
        match self.room_task.await {
            Ok(r) => r,
            Err(e) if e.is_cancelled() => Ok(()),
            Err(e) => Err(ServerError::Task(e.to_string())),
        }
    }

    /// Stops immediately, leaving the log as a crash would.
    pub fn abort(self) {
        self.accept.abort();
        self.room_task.abort();
    }

    /// Waits for the room task to end, which only happens on error or close.
    pub async fn join(self) -> Result<(), ServerError> {
        let r = self.room_task.await;
        self.accept.abort();
        r.map_err(|e| ServerError::Task(e.to_string()))?
    }
}

pub async fn start(config: ServerConfig, clock: Arc<dyn Clock>) -> Result<ServerHandle, ServerError> {
    config.script.validate()?;
    if !(config.tick_hz > 0.0 && config.tick_hz.is_finite()) {
        return Err(ServerError::Config(format!("tick rate must be positive, got {}", config.tick_hz)));
    }
    let facilitator = Facilitator::new(config.script.clone(), ROOM_ID);
    let room_config = RoomConfig {
        activity: config.activity.clone(),
        log_dir: config.log_dir.clone(),
        tick_hz: config.tick_hz,
        max_room_size: config.max_room_size,
    };
    let (room, room_task) = spawn_room(facilitator, &room_config, clock.clone())?;
    let listener = TcpListener::bind(config.bind).await?;
    let local_addr = listener.local_addr()?;
    tracing::info!(%local_addr, activity = %config.activity, "listening");

    let accept_room = room.clone();
    let timeout = config.handshake_timeout;
    let accept = tokio::spawn(async move {
        loop {
            match listener.accept().await {
                Ok((stream, peer)) => {
                    let room = accept_room.clone();
                    let clock = clock.clone();
                    tokio::spawn(async move {
                        if let Err(e) = serve_connection(stream, peer, room, clock, timeout).await {
                            tracing::debug!(%peer, error = %e, "connection ended with an error");
                        }
                    });
                }
                Err(e) => tracing::warn!(error = %e, "accept failed"),
            }
        }
    });
    Ok(ServerHandle { local_addr, room, accept, room_task })
}

fn ws_config() -> WebSocketConfig {
    // Room above the protocol limit, so oversize frames get an error frame
    // rather than a dropped connection.
    WebSocketConfig::default().max_message_size(Some(64 * MAX_FRAME_BYTES)).max_frame_size(Some(64 * MAX_FRAME_BYTES))
}

fn student_from_query(query: Option<&str>) -> Option<String> {
    query?
        .split('&')
        .filter_map(|kv| kv.split_once('='))
        .find(|(k, _)| *k == "student")
        .map(|(_, v)| v.to_owned())
        .filter(|v| !v.is_empty())
}

async fn send(ws: &mut WebSocketStream<TcpStream>, frame: &ServerFrame) -> Result<(), ServerError> {
    ws.send(Message::text(frame.to_json())).await?;
    Ok(())
}

/// Runs one socket: upgrade, wait for hello, then relay frames both ways.
#[allow(clippy::result_large_err)]
async fn serve_connection(
    stream: TcpStream,
    peer: SocketAddr,
    room: RoomHandle,
    clock: Arc<dyn Clock>,
    handshake_timeout: Duration,
) -> Result<(), ServerError> {
    let mut student: Option<String> = None;
    let handshake = async {
        let callback = |req: &Request, resp: Response| {
            student = student_from_query(req.uri().query());
            Ok(resp)
        };
        let mut ws = tokio_tungstenite::accept_hdr_async_with_config(stream, callback, Some(ws_config())).await?;
        loop {
            let Some(msg) = ws.next().await else { return Err(ServerError::Disconnected) };
            let text = match msg? {
                Message::Text(t) => t,
                Message::Close(_) => return Err(ServerError::Disconnected),
                _ => continue,
            };
            match parse_client_frame(&text) {
                Ok(ClientFrame::Hello { name }) => return Ok((ws, name)),
                Ok(_) => {
                    let f = ServerFrame::error(clock.now_ms(), ErrorCode::NotAdmitted, "send hello first");
                    send(&mut ws, &f).await?;
                }
                Err(r) => send(&mut ws, &ServerFrame::error(clock.now_ms(), r.code, r.message)).await?,
            }
        }
    };
    let outcome = match tokio::time::timeout(handshake_timeout, handshake).await {
        Ok(r) => r,
        Err(_) => Err(ServerError::HandshakeTimeout),
    };
    let (mut ws, requested) = match outcome {
        Ok(pair) => pair,
        Err(e) => {
            let who = student.unwrap_or_else(|| format!("unknown@{peer}"));
            tracing::info!(student = %who, reason = %e, "connection never completed its hello");
            room.connect_fail(&who);
            return Err(e);
        }
    };

    let (tx, mut rx) = mpsc::unbounded_channel();
    let name = match room.admit(&requested, tx).await {
        Ok(name) => name,
        Err(e) => {
            send(&mut ws, &e.to_frame(clock.now_ms())).await?;
            let _ = ws.close(None).await;
            return Ok(());
        }
    };

    let result = relay(&mut ws, &mut rx, &room, &name, clock.as_ref()).await;
    room.leave(&name);
    let _ = ws.close(None).await;
    result
}

async fn relay(
    ws: &mut WebSocketStream<TcpStream>,
    rx: &mut mpsc::UnboundedReceiver<ServerFrame>,
    room: &RoomHandle,
    name: &str,
    clock: &dyn Clock,
) -> Result<(), ServerError> {
    loop {
        tokio::select! {
            out = rx.recv() => match out {
                Some(frame) => send(ws, &frame).await?,
                None => return Ok(()),
            },
            incoming = ws.next() => {
                let Some(msg) = incoming else { return Ok(()) };
                let text = match msg? {
                    Message::Text(t) => t,
                    Message::Close(_) => return Ok(()),
                    _ => continue,
                };
                match parse_client_frame(&text) {
                    Ok(ClientFrame::Post { text }) => room.post(name, &text),
                    Ok(ClientFrame::Bye) => return Ok(()),
                    Ok(ClientFrame::Hello { .. }) => {
                        send(ws, &ServerFrame::error(clock.now_ms(), ErrorCode::AlreadyAdmitted, "already joined")).await?;
                    }
                    Err(r) => send(ws, &ServerFrame::error(clock.now_ms(), r.code, r.message)).await?,
                }
            }
        }
    }
}
