//! Fixed workloads for the benchmarks.

use rollingchat_core::analytics::PersonPeriod;
use rollingchat_core::chatcore::{FacilitationScript, RoomEvent};
use rollingchat_core::simharness::{
    gen_panel, simulate_course, text_rng, BotPlan, CourseSpec, SyntheticPanelSpec, SyntheticPredictor, TextGen,
};

/// `n` chat lines, roughly `on_topic_share` of them drawn from `prompt`.
pub fn chat_window(prompt: &str, n: usize, on_topic_share: f64) -> Vec<String> {
    let seed =
        BotPlan { name: "bench".into(), arrive_at: 0, leave_at: 0, connect_fail: false, posts: vec![], text_seed: 11 };
    let mut rng = text_rng(&seed);
    let gen = TextGen::default();
    (0..n).map(|i| gen.compose(&mut rng, Some(prompt), (i as f64 + 0.5) / n as f64 <= on_topic_share)).collect()
}

/// Every room log of a simulated course.
pub fn course_logs(seed: u64) -> Vec<Vec<RoomEvent>> {
    let data = simulate_course(&CourseSpec::demo(seed), &FacilitationScript::sample()).expect("demo course simulates");
    data.logs.into_iter().map(|l| l.events).collect()
}

/// A synthetic panel with all five predictors.
pub fn panel(n_students: usize) -> Vec<PersonPeriod> {
    gen_panel(&SyntheticPanelSpec {
        n_students,
        n_weeks: 12,
        baseline_hazard: 0.1,
        predictors: vec![
            SyntheticPredictor::normal("video_clicks_z", 1.0),
            SyntheticPredictor::bernoulli("malfunction", 1.7, 0.15),
            SyntheticPredictor::bernoulli("alone", 0.89, 0.3),
            SyntheticPredictor::bernoulli("pair", 0.6, 0.2),
            SyntheticPredictor::bernoulli("group", 0.8, 0.15),
        ],
        seed: 1,
    })
    .expect("valid spec")
}
