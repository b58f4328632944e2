//! File-level steps shared by the command line: logs → sessions → panel → fit.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

use crate::analytics::{
    anova_oneway, build_panel, classify_sessions, group_time_stats, load_room_logs, times_by_room_size, write_clicks,
    write_panel, write_sessions, write_table2, AnalyticsError, PersonPeriod, GROUP_LABELS, PREDICTOR_COLUMNS,
};
use crate::chatcore::{log_path, write_log, FacilitationScript, LogError};
use crate::simharness::{simulate_course, CourseSpec, SimError};
use crate::survival::{fit, report_table, write_fit_csv, FitError, FitOptions, SurvivalFit};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Predictors from `wanted` that vary across the panel; a column that never
/// changes cannot be estimated next to the intercept.
pub fn varying_predictors(panel: &[PersonPeriod], wanted: &[&str]) -> (Vec<String>, Vec<String>) {
    let mut keep = Vec::new();
    let mut omitted = Vec::new();
    for &name in wanted {
        let first = panel.first().and_then(|r| r.predictor(name));
        let varies = panel.iter().any(|r| r.predictor(name) != first);
        if varies {
            keep.push(name.to_owned());
        } else {
            omitted.push(name.to_owned());
        }
    }
    (keep, omitted)
}

/// One-way ANOVA of session time over the room-size groups that have data.
pub fn time_anova_text(sessions: &[crate::analytics::SessionFeatures]) -> String {
    let groups = times_by_room_size(sessions);
    let labels: Vec<&str> = GROUP_LABELS.iter().zip(&groups).filter(|(_, g)| !g.is_empty()).map(|(l, _)| *l).collect();
    let present: Vec<&Vec<f64>> = groups.iter().filter(|g| !g.is_empty()).collect();
    match anova_oneway(&present) {
        Ok(a) => format!(
            "one-way ANOVA of time in chat over room sizes {}: F({}, {}) = {:.4}, p = {:.4}\n",
            labels.join(", "),
            a.df_between,
            a.df_within,
            a.f,
            a.p
        ),
        Err(e) => format!("one-way ANOVA of time in chat not available: {e}\n"),
    }
}

#[derive(Debug, Clone)]
pub struct DemoOutputs {
    pub dir: PathBuf,
    pub sessions: usize,
    pub panel_rows: usize,
    pub fit: SurvivalFit,
    pub table1: String,
}

pub const DEMO_START: &str = "2016-01-04";

/// Simulates a course, writes its logs and clicks under `out`, then runs
/// the analysis on those files: sessions.csv, table2.csv, anova.txt,
/// panel.csv, fit.csv and table1.txt.
pub fn run_demo(seed: u64, out: &Path, script: &FacilitationScript) -> Result<DemoOutputs, PipelineError> {
    let spec = CourseSpec::demo(seed);
    let data = simulate_course(&spec, script)?;
    let log_dir = out.join("logs");
    if log_dir.exists() {
        std::fs::remove_dir_all(&log_dir)?;
    }
    for log in &data.logs {
        write_log(log_path(&log_dir, &log.activity, &log.room), &log.events)?;
    }
    let clicks_path = out.join("clicks.csv");
    write_clicks(&clicks_path, &data.clicks)?;

    let logs = load_room_logs(&log_dir)?;
    let sessions = classify_sessions(&logs)?;
    write_sessions(out.join("sessions.csv"), &sessions)?;
    write_table2(out.join("table2.csv"), &group_time_stats(&sessions)?)?;
    std::fs::write(out.join("anova.txt"), time_anova_text(&sessions))?;

    let clicks = crate::analytics::read_clicks(&clicks_path)?;
    let start = crate::analytics::parse_start(DEMO_START)?;
    let panel = build_panel(&sessions, &clicks, start, spec.n_weeks)?;
    write_panel(out.join("panel.csv"), &panel)?;

    let (predictors, omitted) = varying_predictors(&panel, &PREDICTOR_COLUMNS);
    let fitted = fit(&panel, &predictors, &FitOptions::default())?;
    write_fit_csv(out.join("fit.csv"), &fitted)?;
    let mut table1 = report_table(&fitted);
    if !omitted.is_empty() {
        let _ = writeln!(table1, "omitted (no variation): {}", omitted.join(", "));
    }
    std::fs::write(out.join("table1.txt"), &table1)?;

    Ok(DemoOutputs { dir: out.to_owned(), sessions: sessions.len(), panel_rows: panel.len(), fit: fitted, table1 })
}
