use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::event::{EventKind, Millis, RoomEvent, TopicId};
use super::log::LogError;
use super::script::FacilitationScript;

/// The parts of a script that state reconstruction depends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateConfig {
    pub dormancy_window_ms: Millis,
    pub persist_seen_across_reset: bool,
}

impl From<&FacilitationScript> for StateConfig {
    fn from(script: &FacilitationScript) -> Self {
        StateConfig {
            dormancy_window_ms: script.dormancy_window_ms(),
            persist_seen_across_reset: script.persist_seen_across_reset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub topic_id: TopicId,
    pub issued_at: Millis,
    pub present: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowMessage {
    pub ts: Millis,
    pub actor: String,
    pub text: String,
}

/// Live facilitation state of one room.
///
/// Every field is a pure function of the room's event log: the only way to
/// change a `RoomState` is [`RoomState::apply`], which is what both the live
/// engine and [`replay`] use.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoomState {
    pub participants: BTreeSet<String>,
    /// `None` while no prompt has been issued in the current run.
    pub topic_index: Option<TopicId>,
    pub topic_started_at: Option<Millis>,
    /// Prompts whose discussion period ended and was followed by another prompt.
    pub topics_discussed: usize,
    /// Per student, topics delivered while they were present. Survives resets
    /// unless the script disables it.
    pub seen_prompts: BTreeMap<String, BTreeSet<TopicId>>,
    pub prompt_records: Vec<PromptRecord>,
    /// Student messages inside the trailing dormancy window.
    pub window: VecDeque<WindowMessage>,
    pub last_poke_at: Option<Millis>,
    /// Pokes issued for the current topic; selects the next rephrasing.
    pub pokes_in_topic: usize,
    pub utterances: BTreeMap<String, u64>,
    pub summaries_issued: usize,
    pub last_ts: Option<Millis>,
}

impl RoomState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.participants.is_empty()
    }

    pub fn has_seen(&self, who: &str, topic: TopicId) -> bool {
        self.seen_prompts.get(who).is_some_and(|s| s.contains(&topic))
    }

    /// Window messages strictly newer than `now - window_ms`.
    pub fn window_since(&self, now: Millis, window_ms: Millis) -> impl Iterator<Item = &WindowMessage> {
        let cutoff = now - window_ms;
        self.window.iter().filter(move |m| m.ts > cutoff)
    }

    /// Folds one event into the state.
    pub fn apply(&mut self, ev: &RoomEvent, cfg: &StateConfig) -> Result<(), LogError> {
        if let Some(last) = self.last_ts {
            if ev.ts < last {
                return Err(LogError::OrderingViolation { previous: last, got: ev.ts });
            }
        }
        match ev.kind {
            EventKind::Join => {
                if !self.participants.insert(ev.actor.clone()) {
                    return Err(LogError::protocol(format!("{} joined twice", ev.actor)));
                }
            }
            EventKind::Leave => {
                if !self.participants.remove(&ev.actor) {
                    return Err(LogError::protocol(format!("{} left without joining", ev.actor)));
                }
            }
            EventKind::Message => {
                if !self.participants.contains(&ev.actor) {
                    return Err(LogError::protocol(format!("{} posted while absent", ev.actor)));
                }
                let cutoff = ev.ts - cfg.dormancy_window_ms;
                while self.window.front().is_some_and(|m| m.ts <= cutoff) {
                    self.window.pop_front();
                }
                self.window.push_back(WindowMessage {
                    ts: ev.ts,
                    actor: ev.actor.clone(),
                    text: ev.text().unwrap_or_default().to_owned(),
                });
                *self.utterances.entry(ev.actor.clone()).or_default() += 1;
            }
            EventKind::Prompt => {
                let topic = ev.topic_id().ok_or_else(|| LogError::protocol("prompt without topic_id".into()))?;
                if self.topic_index.is_some() {
                    self.topics_discussed += 1;
                }
                self.topic_index = Some(topic);
                self.topic_started_at = Some(ev.ts);
                for who in &self.participants {
                    self.seen_prompts.entry(who.clone()).or_default().insert(topic);
                }
                self.prompt_records.push(PromptRecord {
                    topic_id: topic,
                    issued_at: ev.ts,
                    present: self.participants.clone(),
                });
                self.last_poke_at = None;
                self.pokes_in_topic = 0;
            }
            EventKind::Poke => {
                self.last_poke_at = Some(ev.ts);
                self.pokes_in_topic += 1;
            }
            EventKind::SummaryRequest | EventKind::Summary => {
                self.summaries_issued += 1;
            }
            EventKind::Reset => {
                if !self.participants.is_empty() {
                    return Err(LogError::protocol(format!(
                        "reset with {} participants present",
                        self.participants.len()
                    )));
                }
                let seen = if cfg.persist_seen_across_reset {
                    std::mem::take(&mut self.seen_prompts)
                } else {
                    BTreeMap::new()
                };
                *self = RoomState { seen_prompts: seen, ..RoomState::default() };
            }
            EventKind::ConnectFail => {}
        }
        self.last_ts = Some(ev.ts);
        Ok(())
    }
}

/// Reconstructs the state after every event of a room log.
pub fn replay(events: &[RoomEvent], cfg: &StateConfig) -> Result<Vec<RoomState>, LogError> {
    let mut state = RoomState::new();
    let mut snapshots = Vec::with_capacity(events.len());
    for ev in events {
        state.apply(ev, cfg)?;
        snapshots.push(state.clone());
    }
    Ok(snapshots)
}

/// State after the whole log; cheaper than [`replay`] when only the end matters.
pub fn replay_final(events: &[RoomEvent], cfg: &StateConfig) -> Result<RoomState, LogError> {
    let mut state = RoomState::new();
    for ev in events {
        state.apply(ev, cfg)?;
    }
    Ok(state)
}
