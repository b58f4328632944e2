//! CSV inputs and outputs, plus event-log directory loading.

use chrono::{DateTime, NaiveDate};
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::path::Path;

use super::panel::{ClickRecord, PersonPeriod};
use super::sessions::SessionFeatures;
use super::stats::GroupStats;
use super::AnalyticsError;
use crate::chatcore::{find_logs, read_log, Millis, RoomEvent};

pub const SESSIONS_HEADER: &str = "student,room_id,entered_at,left_at,max_peers,category,time_spent";
pub const PANEL_HEADER: &str = "student,week_index,video_clicks_z,malfunction,alone,pair,group,drop";
pub const TABLE2_HEADER: &str = "group_label,n,mean_time,sd_time,median_time";
pub const CLICKS_HEADER: &str = "ts,student,kind";

pub fn write_csv<T: Serialize>(path: impl AsRef<Path>, rows: &[T], header: &str) -> Result<(), AnalyticsError> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    // Written by hand so empty tables still carry their header.
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header.split(','))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>, AnalyticsError> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<Result<Vec<T>, _>>()?;
    Ok(rows)
}

pub fn write_sessions(path: impl AsRef<Path>, rows: &[SessionFeatures]) -> Result<(), AnalyticsError> {
    write_csv(path, rows, SESSIONS_HEADER)
}

pub fn write_panel(path: impl AsRef<Path>, rows: &[PersonPeriod]) -> Result<(), AnalyticsError> {
    write_csv(path, rows, PANEL_HEADER)
}

pub fn write_table2(path: impl AsRef<Path>, rows: &[GroupStats]) -> Result<(), AnalyticsError> {
    write_csv(path, rows, TABLE2_HEADER)
}

pub fn write_clicks(path: impl AsRef<Path>, rows: &[ClickRecord]) -> Result<(), AnalyticsError> {
    write_csv(path, rows, CLICKS_HEADER)
}

pub fn read_sessions(path: impl AsRef<Path>) -> Result<Vec<SessionFeatures>, AnalyticsError> {
    read_csv(path)
}

pub fn read_panel(path: impl AsRef<Path>) -> Result<Vec<PersonPeriod>, AnalyticsError> {
    read_csv(path)
}

pub fn read_clicks(path: impl AsRef<Path>) -> Result<Vec<ClickRecord>, AnalyticsError> {
    read_csv(path)
}

/// Every room log under `dir`, in path order.
pub fn load_room_logs(dir: impl AsRef<Path>) -> Result<Vec<Vec<RoomEvent>>, AnalyticsError> {
    find_logs(dir)?.iter().map(|p| read_log(p).map_err(AnalyticsError::from)).collect()
}

/// Accepts `YYYY-MM-DD` (UTC midnight) or a full RFC 3339 timestamp.
pub fn parse_start(s: &str) -> Result<Millis, AnalyticsError> {
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(d.and_hms_opt(0, 0, 0).expect("midnight exists").and_utc().timestamp_millis());
    }
    DateTime::parse_from_rfc3339(s)
        .map(|dt| dt.timestamp_millis())
        .map_err(|e| AnalyticsError::InvalidInput(format!("bad start date {s:?}: {e}")))
}
