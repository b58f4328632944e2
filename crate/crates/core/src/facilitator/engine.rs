use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::relevance::{relevance, RelevanceScore};
use crate::chatcore::{
    FacilitationScript, LogError, Millis, RoomEvent, RoomState, StateConfig, SummaryPolicy, TopicId,
};

#[derive(Debug, Error)]
pub enum FacilitatorError {
    #[error("{0} is already in the room")]
    DuplicateJoin(String),
    #[error("{0} is not in the room")]
    UnknownParticipant(String),
    #[error("{0:?} is reserved for the agent")]
    ReservedName(String),
    #[error("tick on an empty room")]
    EmptyRoom,
    #[error("no topic has been discussed yet")]
    NothingToSummarize,
    #[error(transparent)]
    Log(#[from] LogError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    SendPrompt,
    SendPoke,
    RequestSummary,
    SendAgentSummary,
    None,
}

/// Something the agent posts to the whole room.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentAction {
    pub kind: ActionKind,
    pub topic_id: Option<TopicId>,
    pub text: String,
}

impl AgentAction {
    pub fn to_event(&self, ts: Millis, room: &str, agent: &str) -> Option<RoomEvent> {
        let ev = match self.kind {
            ActionKind::SendPrompt => RoomEvent::prompt(ts, room, agent, self.topic_id?, &self.text),
            ActionKind::SendPoke => RoomEvent::poke(ts, room, agent, self.topic_id?, &self.text),
            ActionKind::RequestSummary => RoomEvent::summary_request(ts, room, agent, &self.text),
            ActionKind::SendAgentSummary => RoomEvent::summary(ts, room, agent, &self.text),
            ActionKind::None => return None,
        };
        Some(ev)
    }
}

/// Result of one engine step: the agent's actions plus every event that was
/// applied to the state, in log order (the trigger first).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transition {
    pub actions: Vec<AgentAction>,
    pub events: Vec<RoomEvent>,
}

/// The facilitation state machine for one room.
///
/// It never reads a clock; every entry point takes `now`. State changes go
/// through [`RoomState::apply`] on the emitted events, so replaying the
/// logged events reproduces the state exactly.
#[derive(Debug, Clone)]
pub struct Facilitator {
    script: FacilitationScript,
    room: String,
    cfg: StateConfig,
}

impl Facilitator {
    pub fn new(script: FacilitationScript, room: impl Into<String>) -> Self {
        let cfg = StateConfig::from(&script);
        Facilitator { script, room: room.into(), cfg }
    }

    pub fn script(&self) -> &FacilitationScript {
        &self.script
    }

    pub fn room(&self) -> &str {
        &self.room
    }

    pub fn agent_name(&self) -> &str {
        &self.script.agent_name
    }

    pub fn state_config(&self) -> StateConfig {
        self.cfg
    }

    fn emit(&self, state: &mut RoomState, tr: &mut Transition, ev: RoomEvent) -> Result<(), FacilitatorError> {
        state.apply(&ev, &self.cfg)?;
        tr.events.push(ev);
        Ok(())
    }

    fn act(
        &self,
        state: &mut RoomState,
        tr: &mut Transition,
        action: AgentAction,
        now: Millis,
    ) -> Result<(), FacilitatorError> {
        if let Some(ev) = action.to_event(now, &self.room, self.agent_name()) {
            self.emit(state, tr, ev)?;
        }
        tr.actions.push(action);
        Ok(())
    }

    /// Lowest topic other than the current one that nobody present has seen.
    pub fn next_topic(&self, state: &RoomState) -> Option<TopicId> {
        self.script
            .topics
            .iter()
            .map(|t| t.id)
            .filter(|&t| Some(t) != state.topic_index)
            .find(|&t| state.participants.iter().all(|p| !state.has_seen(p, t)))
    }

    fn issue_next_prompt(
        &self,
        state: &mut RoomState,
        tr: &mut Transition,
        now: Millis,
    ) -> Result<(), FacilitatorError> {
        if let Some(topic) = self.next_topic(state) {
            let text = self.script.topics[topic as usize].prompt.clone();
            self.act(state, tr, AgentAction { kind: ActionKind::SendPrompt, topic_id: Some(topic), text }, now)?;
        }
        Ok(())
    }

    pub fn on_join(&self, state: &mut RoomState, who: &str, now: Millis) -> Result<Transition, FacilitatorError> {
        if who == self.agent_name() {
            return Err(FacilitatorError::ReservedName(who.to_owned()));
        }
        if state.participants.contains(who) {
            return Err(FacilitatorError::DuplicateJoin(who.to_owned()));
        }
        let mut tr = Transition::default();
        let was_empty = state.is_empty();
        self.emit(state, &mut tr, RoomEvent::join(now, &self.room, who))?;

        if state.topics_discussed >= self.script.summary_min_topics {
            let ask_group = match self.script.summary_policy {
                SummaryPolicy::Alternate => state.summaries_issued.is_multiple_of(2),
                SummaryPolicy::AlwaysRequest => true,
                SummaryPolicy::AlwaysAgent => false,
            };
            let action = if ask_group {
                AgentAction {
                    kind: ActionKind::RequestSummary,
                    topic_id: state.topic_index,
                    text: format!(
                        "Welcome, {who}! Could someone summarize what the group has discussed so far, to help {who} catch up?"
                    ),
                }
            } else {
                AgentAction {
                    kind: ActionKind::SendAgentSummary,
                    topic_id: state.topic_index,
                    text: format!("Welcome, {who}! {}", self.summarize(state)?),
                }
            };
            self.act(state, &mut tr, action, now)?;
        }

        if was_empty || state.topic_index.is_none() {
            self.issue_next_prompt(state, &mut tr, now)?;
        }
        Ok(tr)
    }

    pub fn on_leave(&self, state: &mut RoomState, who: &str, now: Millis) -> Result<Transition, FacilitatorError> {
        if !state.participants.contains(who) {
            return Err(FacilitatorError::UnknownParticipant(who.to_owned()));
        }
        let mut tr = Transition::default();
        self.emit(state, &mut tr, RoomEvent::leave(now, &self.room, who))?;
        if state.is_empty() {
            self.emit(state, &mut tr, RoomEvent::reset(now, &self.room, self.agent_name()))?;
        }
        Ok(tr)
    }

    pub fn on_message(
        &self,
        state: &mut RoomState,
        who: &str,
        text: &str,
        now: Millis,
    ) -> Result<Transition, FacilitatorError> {
        if !state.participants.contains(who) {
            return Err(FacilitatorError::UnknownParticipant(who.to_owned()));
        }
        let mut tr = Transition::default();
        self.emit(state, &mut tr, RoomEvent::message(now, &self.room, who, text))?;
        Ok(tr)
    }

    /// Relevance of the trailing window against the current prompt.
    pub fn window_relevance(&self, state: &RoomState, now: Millis) -> Option<RelevanceScore> {
        let topic = self.script.topic(state.topic_index?)?;
        let texts: Vec<&str> =
            state.window_since(now, self.script.dormancy_window_ms()).map(|m| m.text.as_str()).collect();
        Some(relevance(&texts, &topic.prompt))
    }

    pub fn tick(&self, state: &mut RoomState, now: Millis) -> Result<Transition, FacilitatorError> {
        if state.is_empty() {
            return Err(FacilitatorError::EmptyRoom);
        }
        let mut tr = Transition::default();
        let (Some(topic_id), Some(started)) = (state.topic_index, state.topic_started_at) else {
            self.issue_next_prompt(state, &mut tr, now)?;
            return Ok(tr);
        };
        let topic = &self.script.topics[topic_id as usize];

        if now - started >= topic.duration_ms() {
            // When nothing is left to ask, the topic simply stays open.
            self.issue_next_prompt(state, &mut tr, now)?;
            return Ok(tr);
        }

        let window = self.script.dormancy_window_ms();
        let quiet_since = state.last_poke_at.map_or(started, |p| p.max(started));
        if now - quiet_since < window {
            return Ok(tr);
        }
        let score = self.window_relevance(state, now).expect("topic is current");
        if score.is_dormant() || score.value < self.script.relevance_threshold {
            let text = topic.pokes[state.pokes_in_topic % topic.pokes.len()].clone();
            self.act(state, &mut tr, AgentAction { kind: ActionKind::SendPoke, topic_id: Some(topic_id), text }, now)?;
        }
        Ok(tr)
    }

    /// Lists the discussed prompts in delivery order and names the current one.
    pub fn summarize(&self, state: &RoomState) -> Result<String, FacilitatorError> {
        if state.topics_discussed == 0 {
            return Err(FacilitatorError::NothingToSummarize);
        }
        let prompt_text = |id: TopicId| self.script.topic(id).map_or("", |t| t.prompt.as_str());
        let (current, discussed) = state.prompt_records.split_last().ok_or(FacilitatorError::NothingToSummarize)?;
        let listed: Vec<String> =
            discussed.iter().enumerate().map(|(i, r)| format!("({}) {}", i + 1, prompt_text(r.topic_id))).collect();
        Ok(format!("Topics discussed so far: {}. Current topic: {}", listed.join("; "), prompt_text(current.topic_id)))
    }
}
