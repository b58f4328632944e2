use serde::{Deserialize, Serialize};
use std::fmt;

/// Milliseconds since the Unix epoch.
pub type Millis = i64;

/// Index of a topic in script order.
pub type TopicId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Join,
    Leave,
    Message,
    Prompt,
    Poke,
    SummaryRequest,
    Summary,
    Reset,
    ConnectFail,
}

impl EventKind {
    pub const ALL: [EventKind; 9] = [
        EventKind::Join,
        EventKind::Leave,
        EventKind::Message,
        EventKind::Prompt,
        EventKind::Poke,
        EventKind::SummaryRequest,
        EventKind::Summary,
        EventKind::Reset,
        EventKind::ConnectFail,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Join => "join",
            EventKind::Leave => "leave",
            EventKind::Message => "message",
            EventKind::Prompt => "prompt",
            EventKind::Poke => "poke",
            EventKind::SummaryRequest => "summary_request",
            EventKind::Summary => "summary",
            EventKind::Reset => "reset",
            EventKind::ConnectFail => "connect_fail",
        }
    }

    /// Kinds authored by the facilitation agent.
    pub fn is_agent_kind(self) -> bool {
        matches!(self, EventKind::Prompt | EventKind::Poke | EventKind::SummaryRequest | EventKind::Summary)
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Kind-specific payload. Absent keys are omitted from the serialized line.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Payload {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic_id: Option<TopicId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub student: Option<String>,
}

/// One record of a room's append-only log.
///
/// Serialized as a single JSON object per line with keys in the fixed order
/// `ts, room, actor, kind, payload`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoomEvent {
    pub ts: Millis,
    pub room: String,
    pub actor: String,
    pub kind: EventKind,
    #[serde(default)]
    pub payload: Payload,
}

impl RoomEvent {
    fn bare(ts: Millis, room: &str, actor: &str, kind: EventKind) -> Self {
        RoomEvent { ts, room: room.to_owned(), actor: actor.to_owned(), kind, payload: Payload::default() }
    }

    pub fn join(ts: Millis, room: &str, who: &str) -> Self {
        Self::bare(ts, room, who, EventKind::Join)
    }

    pub fn leave(ts: Millis, room: &str, who: &str) -> Self {
        Self::bare(ts, room, who, EventKind::Leave)
    }

    pub fn message(ts: Millis, room: &str, who: &str, text: impl Into<String>) -> Self {
        let mut ev = Self::bare(ts, room, who, EventKind::Message);
        ev.payload.text = Some(text.into());
        ev
    }

    pub fn prompt(ts: Millis, room: &str, agent: &str, topic: TopicId, text: impl Into<String>) -> Self {
        let mut ev = Self::bare(ts, room, agent, EventKind::Prompt);
        ev.payload.topic_id = Some(topic);
        ev.payload.text = Some(text.into());
        ev
    }

    pub fn poke(ts: Millis, room: &str, agent: &str, topic: TopicId, text: impl Into<String>) -> Self {
        let mut ev = Self::bare(ts, room, agent, EventKind::Poke);
        ev.payload.topic_id = Some(topic);
        ev.payload.text = Some(text.into());
        ev
    }

    pub fn summary_request(ts: Millis, room: &str, agent: &str, text: impl Into<String>) -> Self {
        let mut ev = Self::bare(ts, room, agent, EventKind::SummaryRequest);
        ev.payload.text = Some(text.into());
        ev
    }

    pub fn summary(ts: Millis, room: &str, agent: &str, text: impl Into<String>) -> Self {
        let mut ev = Self::bare(ts, room, agent, EventKind::Summary);
        ev.payload.text = Some(text.into());
        ev
    }

    pub fn reset(ts: Millis, room: &str, agent: &str) -> Self {
        Self::bare(ts, room, agent, EventKind::Reset)
    }

    /// A click-to-enter that never reached the room. `actor` is the server's
    /// reserved name; the student id lives in the payload.
    pub fn connect_fail(ts: Millis, room: &str, agent: &str, student: &str) -> Self {
        let mut ev = Self::bare(ts, room, agent, EventKind::ConnectFail);
        ev.payload.student = Some(student.to_owned());
        ev
    }

    pub fn text(&self) -> Option<&str> {
        self.payload.text.as_deref()
    }

    pub fn topic_id(&self) -> Option<TopicId> {
        self.payload.topic_id
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("RoomEvent serialization is infallible")
    }

    pub fn from_line(line: &str) -> serde_json::Result<Self> {
        serde_json::from_str(line)
    }
}
