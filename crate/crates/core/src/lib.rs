//! Rolling-admission collaborative chat: the facilitation engine, its event
//! log, session analytics, and the discrete-time survival model used to
//! relate chat experience to course attrition.

pub mod analytics;
pub mod chatcore;
pub mod facilitator;
pub mod pipeline;
pub mod simharness;
pub mod survival;

pub use chatcore::{FacilitationScript, RoomEvent, RoomState};
pub use facilitator::{AgentAction, Facilitator};
