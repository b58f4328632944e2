//! The facilitation agent: prompt scheduling, pokes, and newcomer summaries.

mod engine;
pub mod relevance;

pub use engine::{ActionKind, AgentAction, Facilitator, FacilitatorError, Transition};
pub use relevance::{relevance, tokenize, RelevanceScore};
