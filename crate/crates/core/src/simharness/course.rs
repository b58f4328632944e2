//! Synthetic course: weekly activity, chat visits run through the facilitator,
//! and dropout drawn from a hazard model keyed on each week's chat experience.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use std::collections::BTreeMap;

use super::bots::{plan_bot, BotProfile};
use super::room_sim::simulate_room;
use super::SimError;
use crate::analytics::{classify_room, Category, ClickRecord, VIDEO_KIND, WEEK_MS};
use crate::chatcore::{FacilitationScript, Millis, RoomEvent};
use crate::facilitator::Facilitator;
use crate::survival::model::{logit, sigmoid};

const HOUR_MS: Millis = 3_600_000;
const DAY_MS: Millis = 24 * HOUR_MS;

#[derive(Debug, Clone, PartialEq)]
pub struct CourseSpec {
    pub n_students: usize,
    pub n_weeks: u32,
    pub course_start: Millis,
    /// Weekly probability that an active student clicks into the chat.
    pub chat_prob: f64,
    /// Chat visits land on a random day, inside this many evening hours.
    pub chat_hours_per_day: i64,
    pub baseline_hazard: f64,
    /// True hazard ratios for the weekly chat indicators.
    pub hazard_ratios: BTreeMap<Category, f64>,
    /// Stay, talk and connect-failure behavior of chat visitors.
    pub visit: BotProfile,
    pub seed: u64,
}

impl CourseSpec {
    pub fn demo(seed: u64) -> Self {
        CourseSpec {
            n_students: 400,
            n_weeks: 12,
            // 2016-01-04T00:00:00Z
            course_start: 1_451_865_600_000,
            chat_prob: 0.12,
            chat_hours_per_day: 4,
            baseline_hazard: 0.08,
            hazard_ratios: BTreeMap::from([
                (Category::Malfunction, 1.7),
                (Category::Alone, 0.89),
                (Category::Pair, 0.6),
                (Category::Group, 0.8),
            ]),
            visit: BotProfile {
                arrival_rate: 1.0,
                session_duration: 900.0,
                on_topic_prob: 0.7,
                message_interval: 40.0,
                connect_fail_prob: 0.1,
                seed,
            },
            seed,
        }
    }
}

/// One activity's room log.
#[derive(Debug, Clone)]
pub struct ActivityLog {
    pub activity: String,
    pub room: String,
    pub events: Vec<RoomEvent>,
}

#[derive(Debug, Clone)]
pub struct CourseData {
    pub logs: Vec<ActivityLog>,
    pub clicks: Vec<ClickRecord>,
    /// Students who dropped, with the week they did.
    pub dropped: BTreeMap<String, u32>,
}

pub const ROOM_ID: &str = "main";

pub fn activity_id(week: u32) -> String {
    format!("week-{week:02}")
}

pub fn simulate_course(spec: &CourseSpec, script: &FacilitationScript) -> Result<CourseData, SimError> {
    spec.visit.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let width = (spec.n_students.max(1) as f64).log10() as usize + 1;
    let students: Vec<String> = (0..spec.n_students).map(|i| format!("s{i:0width$}")).collect();
    let rate_dist = Normal::<f64>::new(1.2, 0.7).expect("constant parameters");
    let video_rates: Vec<f64> = students.iter().map(|_| rate_dist.sample(&mut rng).exp()).collect();
    let intercept = logit(spec.baseline_hazard);

    let mut active: Vec<bool> = vec![true; students.len()];
    let mut logs = Vec::new();
    let mut clicks = Vec::new();
    let mut dropped = BTreeMap::new();

    for week in 0..spec.n_weeks {
        let week_start = spec.course_start + week as Millis * WEEK_MS;
        let mut visitors: Vec<(Millis, usize)> = Vec::new();
        for (i, student) in students.iter().enumerate().filter(|(i, _)| active[*i]) {
            clicks.push(ClickRecord {
                ts: week_start + rng.random_range(0..WEEK_MS),
                student: student.clone(),
                kind: "visit".into(),
            });
            let n_video = Poisson::new(video_rates[i]).expect("positive rate").sample(&mut rng) as u64;
            for _ in 0..n_video {
                clicks.push(ClickRecord {
                    ts: week_start + rng.random_range(0..WEEK_MS),
                    student: student.clone(),
                    kind: VIDEO_KIND.into(),
                });
            }
            if rng.random::<f64>() < spec.chat_prob {
                let day = rng.random_range(0..7);
                let offset = day * DAY_MS + 18 * HOUR_MS + rng.random_range(0..spec.chat_hours_per_day * HOUR_MS);
                visitors.push((offset, i));
            }
        }
        visitors.sort();

        let mut categories: BTreeMap<String, Vec<Category>> = BTreeMap::new();
        if !visitors.is_empty() {
            let plans: Vec<_> =
                visitors.iter().map(|&(at, i)| plan_bot(&spec.visit, students[i].clone(), at, &mut rng)).collect();
            let activity = activity_id(week);
            let facilitator = Facilitator::new(script.clone(), ROOM_ID);
            let run = simulate_room(&facilitator, &plans, week_start)?;
            for s in classify_room(&run.events)? {
                categories.entry(s.student).or_default().push(s.category);
            }
            logs.push(ActivityLog { activity, room: ROOM_ID.into(), events: run.events });
        }

        // The last observed week cannot show a drop: activity would have to stop after it.
        if week + 1 == spec.n_weeks {
            break;
        }
        for (i, student) in students.iter().enumerate() {
            if !active[i] {
                continue;
            }
            let mut eta = intercept;
            if let Some(cats) = categories.get(student) {
                for (cat, hr) in &spec.hazard_ratios {
                    if cats.contains(cat) {
                        eta += hr.ln();
                    }
                }
            }
            if rng.random::<f64>() < sigmoid(eta) {
                active[i] = false;
                dropped.insert(student.clone(), week);
            }
        }
    }
    clicks.sort_by(|a, b| (a.ts, &a.student, &a.kind).cmp(&(b.ts, &b.student, &b.kind)));
    Ok(CourseData { logs, clicks, dropped })
}
