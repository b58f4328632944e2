use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::sessions::{Category, SessionFeatures};
use super::AnalyticsError;
use crate::chatcore::Millis;

pub const WEEK_MS: Millis = 7 * 24 * 60 * 60 * 1000;

/// Click kind counted toward the video-clicks control.
pub const VIDEO_KIND: &str = "video";

/// One row of `clicks.csv`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClickRecord {
    pub ts: Millis,
    pub student: String,
    pub kind: String,
}

/// One student-week of the discrete-time survival panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonPeriod {
    pub student: String,
    pub week_index: u32,
    pub video_clicks_z: f64,
    pub malfunction: u8,
    pub alone: u8,
    pub pair: u8,
    pub group: u8,
    pub drop: u8,
}

impl PersonPeriod {
    pub fn indicator(&self, c: Category) -> u8 {
        match c {
            Category::Malfunction => self.malfunction,
            Category::Alone => self.alone,
            Category::Pair => self.pair,
            Category::Group => self.group,
        }
    }

    pub fn is_baseline(&self) -> bool {
        self.malfunction + self.alone + self.pair + self.group == 0
    }

    /// Value of a named predictor column.
    pub fn predictor(&self, name: &str) -> Option<f64> {
        Some(match name {
            "video_clicks_z" => self.video_clicks_z,
            "malfunction" => self.malfunction as f64,
            "alone" => self.alone as f64,
            "pair" => self.pair as f64,
            "group" => self.group as f64,
            _ => return None,
        })
    }
}

pub const PREDICTOR_COLUMNS: [&str; 5] = ["video_clicks_z", "malfunction", "alone", "pair", "group"];

fn week_of(ts: Millis, course_start: Millis, n_weeks: u32) -> Option<u32> {
    if ts < course_start {
        return None;
    }
    let w = (ts - course_start) / WEEK_MS;
    (w < n_weeks as Millis).then_some(w as u32)
}

#[derive(Default)]
struct Week {
    video_clicks: u64,
    flags: [bool; 4],
}

/// Builds the person-period panel.
///
/// Each student gets one row per week from their first to their last active
/// week (chat sessions and any click). Category indicators are the OR over the
/// week's sessions. Video clicks are z-scored over all emitted rows with the
/// population standard deviation. `drop` marks the final row of students whose
/// last active week ends before the observation window does; students still
/// active in the final week are right-censored.
pub fn build_panel(
    sessions: &[SessionFeatures],
    clicks: &[ClickRecord],
    course_start: Millis,
    n_weeks: u32,
) -> Result<Vec<PersonPeriod>, AnalyticsError> {
    if n_weeks == 0 {
        return Err(AnalyticsError::InvalidInput("n_weeks must be positive".into()));
    }
    let mut by_student: BTreeMap<&str, BTreeMap<u32, Week>> = BTreeMap::new();
    for s in sessions {
        if let Some(w) = week_of(s.entered_at, course_start, n_weeks) {
            let week = by_student.entry(&s.student).or_default().entry(w).or_default();
            week.flags[s.category as usize] = true;
        }
    }
    for c in clicks {
        if let Some(w) = week_of(c.ts, course_start, n_weeks) {
            let week = by_student.entry(&c.student).or_default().entry(w).or_default();
            if c.kind == VIDEO_KIND {
                week.video_clicks += 1;
            }
        }
    }
    if by_student.is_empty() {
        return Err(AnalyticsError::EmptyInput);
    }

    let mut rows = Vec::new();
    let mut counts = Vec::new();
    for (student, weeks) in &by_student {
        let first = *weeks.keys().next().expect("non-empty");
        let last = *weeks.keys().next_back().expect("non-empty");
        for w in first..=last {
            let (clicks, flags) = weeks.get(&w).map_or((0, [false; 4]), |wk| (wk.video_clicks, wk.flags));
            counts.push(clicks as f64);
            rows.push(PersonPeriod {
                student: (*student).to_owned(),
                week_index: w,
                video_clicks_z: 0.0,
                malfunction: flags[Category::Malfunction as usize] as u8,
                alone: flags[Category::Alone as usize] as u8,
                pair: flags[Category::Pair as usize] as u8,
                group: flags[Category::Group as usize] as u8,
                drop: (w == last && last + 1 < n_weeks) as u8,
            });
        }
    }

    for (row, z) in rows.iter_mut().zip(standardize(&counts)) {
        row.video_clicks_z = z;
    }
    Ok(rows)
}

/// z-scores with the population standard deviation; all zeros when constant.
pub fn standardize(xs: &[f64]) -> Vec<f64> {
    if xs.is_empty() {
        return Vec::new();
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    if sd == 0.0 {
        return vec![0.0; xs.len()];
    }
    xs.iter().map(|x| (x - mean) / sd).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const DAY: Millis = 24 * 60 * 60 * 1000;

    fn click(ts: Millis, who: &str, kind: &str) -> ClickRecord {
        ClickRecord { ts, student: who.into(), kind: kind.into() }
    }

    fn session(who: &str, at: Millis, category: Category) -> SessionFeatures {
        SessionFeatures {
            student: who.into(),
            room_id: "main".into(),
            entered_at: at,
            left_at: at,
            max_peers: if category == Category::Group { 2 } else { (category == Category::Pair) as u32 },
            category,
            time_spent: 0.0,
        }
    }

    #[test]
    fn three_active_weeks_drop_on_last() {
        let clicks = vec![click(0, "A", "video"), click(15 * DAY, "A", "video")];
        let rows = build_panel(&[], &clicks, 0, 10).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows.iter().map(|r| r.drop).collect::<Vec<_>>(), vec![0, 0, 1]);
        assert_eq!(rows.iter().map(|r| r.week_index).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn week_without_chat_is_baseline() {
        let clicks = vec![click(0, "A", "video"), click(8 * DAY, "A", "video")];
        let sessions = vec![session("A", DAY, Category::Pair)];
        let rows = build_panel(&sessions, &clicks, 0, 10).unwrap();
        assert_eq!(rows[0].pair, 1);
        assert!(rows[1].is_baseline());
    }

    #[test]
    fn several_categories_in_one_week_are_all_set() {
        let sessions = vec![session("A", DAY, Category::Alone), session("A", 2 * DAY, Category::Malfunction)];
        let rows = build_panel(&sessions, &[], 0, 4).unwrap();
        assert_eq!((rows[0].alone, rows[0].malfunction, rows[0].pair), (1, 1, 0));
    }

    #[test]
    fn identical_counts_identical_z() {
        let clicks =
            vec![click(0, "A", "video"), click(1, "B", "video"), click(2, "C", "video"), click(3, "C", "video")];
        let rows = build_panel(&[], &clicks, 0, 4).unwrap();
        assert_eq!(rows[0].video_clicks_z, rows[1].video_clicks_z);
        assert!(rows[2].video_clicks_z > rows[0].video_clicks_z);
    }

    #[test]
    fn active_in_final_week_is_censored() {
        let clicks = vec![click(0, "A", "video"), click(3 * WEEK_MS, "A", "page")];
        let rows = build_panel(&[], &clicks, 0, 4).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.drop == 0));
    }

    #[test]
    fn out_of_window_events_are_ignored() {
        let clicks = vec![click(-1, "A", "video"), click(5 * WEEK_MS, "A", "video"), click(0, "B", "video")];
        let rows = build_panel(&[], &clicks, 0, 4).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].student, "B");
        assert!(matches!(build_panel(&[], &clicks[..1], 0, 4), Err(AnalyticsError::EmptyInput)));
    }

    #[test]
    fn standardize_constant_is_zero() {
        assert_eq!(standardize(&[3.0, 3.0]), vec![0.0, 0.0]);
    }
}
