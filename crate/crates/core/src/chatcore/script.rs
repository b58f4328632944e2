use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

use super::event::{Millis, TopicId};

pub const DEFAULT_TOPIC_DURATION_S: u64 = 600;
pub const DEFAULT_DORMANCY_WINDOW_S: u64 = 120;
pub const DEFAULT_RELEVANCE_THRESHOLD: f64 = 0.05;
pub const DEFAULT_SUMMARY_MIN_TOPICS: usize = 2;
pub const DEFAULT_AGENT_NAME: &str = "Facilitator";

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("script has no topics")]
    NoTopics,
    #[error("topic at position {position} has id {found}; ids must be contiguous from 0")]
    NonContiguousIds { position: usize, found: TopicId },
    #[error("topic {0} has no poke rephrasings")]
    NoPokes(TopicId),
    #[error("topic {0} has an empty prompt")]
    EmptyPrompt(TopicId),
    #[error("topic {0} has zero duration")]
    ZeroDuration(TopicId),
    #[error("dormancy window must be positive")]
    ZeroDormancyWindow,
    #[error("relevance threshold {0} is outside [0, 1]")]
    ThresholdOutOfRange(f64),
    #[error("summary_min_topics must be at least 1")]
    ZeroSummaryMinTopics,
    #[error("agent name must not be empty")]
    EmptyAgentName,
    #[error("reading script: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing script: {0}")]
    Parse(#[from] toml::de::Error),
}

/// One reflection prompt of the macro-script.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicPrompt {
    pub id: TopicId,
    pub prompt: String,
    /// Rephrasings posted when the room goes quiet or off-topic.
    pub pokes: Vec<String>,
    #[serde(default = "default_duration")]
    pub duration_s: u64,
}

impl TopicPrompt {
    pub fn duration_ms(&self) -> Millis {
        (self.duration_s as Millis) * 1000
    }
}

fn default_duration() -> u64 {
    DEFAULT_TOPIC_DURATION_S
}
fn default_dormancy() -> u64 {
    DEFAULT_DORMANCY_WINDOW_S
}
fn default_threshold() -> f64 {
    DEFAULT_RELEVANCE_THRESHOLD
}
fn default_summary_min() -> usize {
    DEFAULT_SUMMARY_MIN_TOPICS
}
fn default_agent_name() -> String {
    DEFAULT_AGENT_NAME.to_owned()
}
fn default_true() -> bool {
    true
}

/// How the agent responds when a newcomer joins after enough topics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummaryPolicy {
    /// Ask the group first, then post an agent summary next time, and so on.
    #[default]
    Alternate,
    AlwaysRequest,
    AlwaysAgent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacilitationScript {
    pub topics: Vec<TopicPrompt>,
    #[serde(default = "default_dormancy")]
    pub dormancy_window_s: u64,
    #[serde(default = "default_threshold")]
    pub relevance_threshold: f64,
    #[serde(default = "default_summary_min")]
    pub summary_min_topics: usize,
    #[serde(default)]
    pub summary_policy: SummaryPolicy,
    #[serde(default = "default_agent_name")]
    pub agent_name: String,
    /// Keep per-student prompt history when the room resets.
    #[serde(default = "default_true")]
    pub persist_seen_across_reset: bool,
}

impl FacilitationScript {
    pub fn new(topics: Vec<TopicPrompt>) -> Result<Self, ScriptError> {
        let script = FacilitationScript {
            topics,
            dormancy_window_s: DEFAULT_DORMANCY_WINDOW_S,
            relevance_threshold: DEFAULT_RELEVANCE_THRESHOLD,
            summary_min_topics: DEFAULT_SUMMARY_MIN_TOPICS,
            summary_policy: SummaryPolicy::default(),
            agent_name: DEFAULT_AGENT_NAME.to_owned(),
            persist_seen_across_reset: true,
        };
        script.validate()?;
        Ok(script)
    }

    pub fn from_toml_str(s: &str) -> Result<Self, ScriptError> {
        let script: FacilitationScript = toml::from_str(s)?;
        script.validate()?;
        Ok(script)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScriptError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("script serialization is infallible")
    }

    pub fn validate(&self) -> Result<(), ScriptError> {
        if self.topics.is_empty() {
            return Err(ScriptError::NoTopics);
        }
        for (position, topic) in self.topics.iter().enumerate() {
            if topic.id as usize != position {
                return Err(ScriptError::NonContiguousIds { position, found: topic.id });
            }
            if topic.prompt.trim().is_empty() {
                return Err(ScriptError::EmptyPrompt(topic.id));
            }
            if topic.pokes.is_empty() {
                return Err(ScriptError::NoPokes(topic.id));
            }
            if topic.duration_s == 0 {
                return Err(ScriptError::ZeroDuration(topic.id));
            }
        }
        if self.dormancy_window_s == 0 {
            return Err(ScriptError::ZeroDormancyWindow);
        }
        if !(0.0..=1.0).contains(&self.relevance_threshold) {
            return Err(ScriptError::ThresholdOutOfRange(self.relevance_threshold));
        }
        if self.summary_min_topics == 0 {
            return Err(ScriptError::ZeroSummaryMinTopics);
        }
        if self.agent_name.trim().is_empty() {
            return Err(ScriptError::EmptyAgentName);
        }
        Ok(())
    }

    pub fn dormancy_window_ms(&self) -> Millis {
        (self.dormancy_window_s as Millis) * 1000
    }

    pub fn topic(&self, id: TopicId) -> Option<&TopicPrompt> {
        self.topics.get(id as usize)
    }

    /// The three-prompt reflection script shipped as a fixture.
    pub fn sample() -> Self {
        Self::from_toml_str(SAMPLE_SCRIPT).expect("bundled sample script is valid")
    }
}

pub const SAMPLE_SCRIPT: &str = include_str!("../../fixtures/sample_script.toml");

#[cfg(test)]
mod tests {
    use super::*;

    fn topic(id: TopicId) -> TopicPrompt {
        TopicPrompt { id, prompt: format!("prompt {id}"), pokes: vec!["poke".into()], duration_s: 600 }
    }

    #[test]
    fn sample_script_is_valid() {
        let s = FacilitationScript::sample();
        assert_eq!(s.topics.len(), 3);
        assert_eq!(s.dormancy_window_s, 120);
        assert_eq!(s.summary_min_topics, 2);
        assert!((s.relevance_threshold - 0.05).abs() < 1e-12);
    }

    #[test]
    fn rejects_gapped_ids() {
        let err = FacilitationScript::new(vec![topic(0), topic(2)]).unwrap_err();
        assert!(matches!(err, ScriptError::NonContiguousIds { position: 1, found: 2 }));
    }

    #[test]
    fn rejects_empty_pokes_and_zero_duration() {
        let mut t = topic(0);
        t.pokes.clear();
        assert!(matches!(FacilitationScript::new(vec![t]), Err(ScriptError::NoPokes(0))));
        let mut t = topic(0);
        t.duration_s = 0;
        assert!(matches!(FacilitationScript::new(vec![t]), Err(ScriptError::ZeroDuration(0))));
        assert!(matches!(FacilitationScript::new(vec![]), Err(ScriptError::NoTopics)));
    }

    #[test]
    fn threshold_bounds() {
        let mut s = FacilitationScript::new(vec![topic(0)]).unwrap();
        s.relevance_threshold = 1.5;
        assert!(matches!(s.validate(), Err(ScriptError::ThresholdOutOfRange(_))));
    }

    #[test]
    fn toml_round_trip() {
        let s = FacilitationScript::sample();
        let again = FacilitationScript::from_toml_str(&s.to_toml_string()).unwrap();
        assert_eq!(s, again);
    }
}
