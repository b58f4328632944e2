//! Simulated students and synthetic data with known ground truth.

mod bots;
mod course;
mod panel_gen;
mod room_sim;

use thiserror::Error;

pub use bots::{
    bot_name, plan_bot, schedule_bots, text_rng, BotPlan, BotProfile, PlannedPost, TextGen, OFF_TOPIC_WORDS,
};
pub use course::{activity_id, simulate_course, ActivityLog, CourseData, CourseSpec, ROOM_ID};
pub use panel_gen::{gen_panel, PredictorDistribution, SyntheticPanelSpec, SyntheticPredictor};
pub use room_sim::{simulate_room, RoomRun, TICK_MS};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid bot profile: {0}")]
    InvalidProfile(String),
    #[error("invalid panel spec: {0}")]
    InvalidPanelSpec(String),
    #[error(transparent)]
    Facilitator(#[from] crate::facilitator::FacilitatorError),
    #[error(transparent)]
    Log(#[from] crate::chatcore::LogError),
    #[error(transparent)]
    Analytics(#[from] crate::analytics::AnalyticsError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}
