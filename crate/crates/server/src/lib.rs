//! WebSocket server for rolling-admission chat rooms.
//!
//! Each activity has one continuous room. A single owner task per room
//! applies admissions, posts, leaves and facilitator ticks in order and
//! appends each resulting event to the room log before broadcasting it.

pub mod bots;
pub mod clock;
pub mod protocol;
pub mod room;
mod server;

use thiserror::Error;

pub use clock::{Clock, ScaledClock, SystemClock};
pub use room::{RoomHandle, RoomSnapshot, ROOM_ID};
pub use server::{start, ServerConfig, ServerHandle};

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("no hello before the handshake timeout")]
    HandshakeTimeout,
    #[error("peer disconnected")]
    Disconnected,
    #[error("websocket: {0}")]
    Ws(#[from] tokio_tungstenite::tungstenite::Error),
    #[error(transparent)]
    Log(#[from] rollingchat_core::chatcore::LogError),
    #[error(transparent)]
    Facilitator(#[from] rollingchat_core::facilitator::FacilitatorError),
    #[error(transparent)]
    Script(#[from] rollingchat_core::chatcore::ScriptError),
    #[error(transparent)]
    Sim(#[from] rollingchat_core::simharness::SimError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("task failed: {0}")]
    Task(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}
