//! Session classification, time-in-chat statistics, post-hoc tests, and the
//! person-period panel.

mod io;
mod panel;
mod sessions;
mod stats;

use thiserror::Error;

pub use io::*;
pub use panel::{build_panel, standardize, ClickRecord, PersonPeriod, PREDICTOR_COLUMNS, VIDEO_KIND, WEEK_MS};
pub use sessions::{
    classify_room, classify_sessions, max_peers, session_spans, Category, PeerCount, SessionFeatures, SessionSpan,
};
pub use stats::{
    anova_oneway, group_time_stats, lower_median, mean, room_size_group, sample_sd, times_by_room_size,
    two_proportion_ztest, Anova, GroupStats, ZTest, GROUP_LABELS,
};

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("malformed session: {0}")]
    MalformedSession(String),
    #[error("no input rows")]
    EmptyInput,
    #[error("within-group variance is zero; F is undefined")]
    DegenerateVariance,
    #[error("pooled proportion is 0 or 1; z is undefined")]
    ZeroPooledVariance,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Log(#[from] crate::chatcore::LogError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}
