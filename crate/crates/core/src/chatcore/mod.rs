//! Room events, the append-only log, and deterministic state reconstruction.

mod event;
mod log;
mod script;
mod state;

pub use event::{EventKind, Millis, Payload, RoomEvent, TopicId};
pub use log::{find_logs, log_path, read_log, write_log, EventLog, LogError, LOG_SUFFIX};
pub use script::{
    FacilitationScript, ScriptError, SummaryPolicy, TopicPrompt, DEFAULT_AGENT_NAME, DEFAULT_DORMANCY_WINDOW_S,
    DEFAULT_RELEVANCE_THRESHOLD, DEFAULT_SUMMARY_MIN_TOPICS, DEFAULT_TOPIC_DURATION_S, SAMPLE_SCRIPT,
};
pub use state::{replay, replay_final, PromptRecord, RoomState, StateConfig, WindowMessage};
