//! Wire frames. Each WebSocket text frame carries one JSON object tagged by
//! `type`. Unknown fields are ignored; an unknown `type` is answered with an
//! `error` frame.

use rollingchat_core::chatcore::{EventKind, Millis, RoomEvent, TopicId};
use serde::{Deserialize, Serialize};

/// Largest accepted client frame, in bytes of text.
pub const MAX_FRAME_BYTES: usize = 8 * 1024;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientFrame {
    Hello { name: String },
    Post { text: String },
    Bye,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Student,
    Agent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresenceEvent {
    Join,
    Leave,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    Malformed,
    UnknownType,
    Oversize,
    NotAdmitted,
    AlreadyAdmitted,
    RoomFull,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerFrame {
    Welcome {
        ts: Millis,
        room: String,
        /// The name the server assigned, suffixed on collision.
        name: String,
        participants: Vec<String>,
    },
    Message {
        ts: Millis,
        sender: String,
        role: Role,
        text: String,
    },
    Presence {
        ts: Millis,
        event: PresenceEvent,
        name: String,
        /// Participants present after the change.
        count: usize,
    },
    Prompt {
        ts: Millis,
        sender: String,
        role: Role,
        topic_id: TopicId,
        text: String,
    },
    Poke {
        ts: Millis,
        sender: String,
        role: Role,
        topic_id: TopicId,
        text: String,
    },
    SummaryRequest {
        ts: Millis,
        sender: String,
        role: Role,
        text: String,
    },
    Summary {
        ts: Millis,
        sender: String,
        role: Role,
        text: String,
    },
    Error {
        ts: Millis,
        code: ErrorCode,
        message: String,
    },
}

impl ServerFrame {
    pub fn ts(&self) -> Millis {
        match self {
            ServerFrame::Welcome { ts, .. }
            | ServerFrame::Message { ts, .. }
            | ServerFrame::Presence { ts, .. }
            | ServerFrame::Prompt { ts, .. }
            | ServerFrame::Poke { ts, .. }
            | ServerFrame::SummaryRequest { ts, .. }
            | ServerFrame::Summary { ts, .. }
            | ServerFrame::Error { ts, .. } => *ts,
        }
    }

    pub fn error(ts: Millis, code: ErrorCode, message: impl Into<String>) -> Self {
        ServerFrame::Error { ts, code, message: message.into() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("frames always serialize")
    }

    /// The frame a logged event is broadcast as, if any. `count` is the
    /// room size after the event.
    pub fn from_event(ev: &RoomEvent, count: usize) -> Option<Self> {
        let text = || ev.text().unwrap_or_default().to_owned();
        let sender = ev.actor.clone();
        let ts = ev.ts;
        Some(match ev.kind {
            EventKind::Join => ServerFrame::Presence { ts, event: PresenceEvent::Join, name: sender, count },
            EventKind::Leave => ServerFrame::Presence { ts, event: PresenceEvent::Leave, name: sender, count },
            EventKind::Message => ServerFrame::Message { ts, sender, role: Role::Student, text: text() },
            EventKind::Prompt => {
                ServerFrame::Prompt { ts, sender, role: Role::Agent, topic_id: ev.topic_id()?, text: text() }
            }
            EventKind::Poke => {
                ServerFrame::Poke { ts, sender, role: Role::Agent, topic_id: ev.topic_id()?, text: text() }
            }
            EventKind::SummaryRequest => ServerFrame::SummaryRequest { ts, sender, role: Role::Agent, text: text() },
            EventKind::Summary => ServerFrame::Summary { ts, sender, role: Role::Agent, text: text() },
            EventKind::Reset | EventKind::ConnectFail => return None,
        })
    }
}

/// Why a client frame was rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameRejection {
    pub code: ErrorCode,
    pub message: String,
}

/// Parses one client text frame.
pub fn parse_client_frame(text: &str) -> Result<ClientFrame, FrameRejection> {
    let reject = |code, message: String| Err(FrameRejection { code, message });
    if text.len() > MAX_FRAME_BYTES {
        return reject(ErrorCode::Oversize, format!("frame of {} bytes exceeds {MAX_FRAME_BYTES}", text.len()));
    }
    let value: serde_json::Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => return reject(ErrorCode::Malformed, format!("not a JSON object: {e}")),
    };
    let kind = match value.get("type").and_then(|t| t.as_str()) {
        Some(k) => k.to_owned(),
        None => return reject(ErrorCode::Malformed, "missing string field \"type\"".into()),
    };
    if !matches!(kind.as_str(), "hello" | "post" | "bye") {
        return reject(ErrorCode::UnknownType, format!("unknown frame type {kind:?}"));
    }
    serde_json::from_value(value).or_else(|e| reject(ErrorCode::Malformed, format!("bad {kind} frame: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn client_frames() {
        assert_eq!(
            parse_client_frame(r#"{"type":"hello","name":"A","extra":1}"#),
            Ok(ClientFrame::Hello { name: "A".into() })
        );
        assert_eq!(parse_client_frame(r#"{"type":"bye"}"#), Ok(ClientFrame::Bye));
        assert_eq!(parse_client_frame(r#"{"type":"dance"}"#).unwrap_err().code, ErrorCode::UnknownType);
        assert_eq!(parse_client_frame(r#"{"type":"post"}"#).unwrap_err().code, ErrorCode::Malformed);
        assert_eq!(parse_client_frame("[1,2]").unwrap_err().code, ErrorCode::Malformed);
        let big = format!(r#"{{"type":"post","text":"{}"}}"#, "x".repeat(MAX_FRAME_BYTES));
        assert_eq!(parse_client_frame(&big).unwrap_err().code, ErrorCode::Oversize);
    }

    #[test]
    fn server_frame_shape() {
        let f = ServerFrame::Message { ts: 3, sender: "A".into(), role: Role::Student, text: "hi".into() };
        assert_eq!(f.to_json(), r#"{"type":"message","ts":3,"sender":"A","role":"student","text":"hi"}"#);
        let ev = RoomEvent::poke(9, "main", "Facilitator", 1, "nudge");
        let f = ServerFrame::from_event(&ev, 2).unwrap();
        assert_eq!(
            f.to_json(),
            r#"{"type":"poke","ts":9,"sender":"Facilitator","role":"agent","topic_id":1,"text":"nudge"}"#
        );
        assert!(ServerFrame::from_event(&RoomEvent::reset(1, "main", "Facilitator"), 0).is_none());
    }
}
