use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::chatcore::Millis;
use crate::facilitator::tokenize;

pub const OFF_TOPIC_WORDS: &str = include_str!("../../fixtures/offtopic_words.txt");

/// How simulated students arrive, talk and leave.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BotProfile {
    /// Expected arrivals per minute (Poisson process).
    pub arrival_rate: f64,
    /// Mean seconds a bot stays (exponential).
    pub session_duration: f64,
    /// Probability that a message reuses the current prompt's vocabulary.
    pub on_topic_prob: f64,
    /// Mean seconds between a bot's messages (exponential).
    pub message_interval: f64,
    /// Probability that a click never connects.
    #[serde(default)]
    pub connect_fail_prob: f64,
    pub seed: u64,
}

impl Default for BotProfile {
    fn default() -> Self {
        BotProfile {
            arrival_rate: 0.5,
            session_duration: 600.0,
            on_topic_prob: 0.8,
            message_interval: 30.0,
            connect_fail_prob: 0.0,
            seed: 0,
        }
    }
}

impl BotProfile {
    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("arrival_rate", self.arrival_rate),
            ("session_duration", self.session_duration),
            ("message_interval", self.message_interval),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::InvalidProfile(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("on_topic_prob", self.on_topic_prob), ("connect_fail_prob", self.connect_fail_prob)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(SimError::InvalidProfile(format!("{name} must be in [0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

/// One planned message: when, and whether it should be on topic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedPost {
    pub at: Millis,
    pub on_topic: bool,
}

/// The full behavior of one simulated student, fixed before the run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BotPlan {
    pub name: String,
    /// Offset from the start of the run.
    pub arrive_at: Millis,
    pub leave_at: Millis,
    pub connect_fail: bool,
    pub posts: Vec<PlannedPost>,
    /// Seeds word choice for this bot's messages.
    pub text_seed: u64,
}

pub fn bot_name(i: usize) -> String {
    format!("bot-{i:03}")
}

fn ms(seconds: f64) -> Millis {
    (seconds * 1000.0).round() as Millis
}

/// Plans a single bot arriving at `arrive_at`.
pub fn plan_bot(profile: &BotProfile, name: String, arrive_at: Millis, rng: &mut impl Rng) -> BotPlan {
    let stay = Exp::new(1.0 / profile.session_duration).expect("validated");
    let gap = Exp::new(1.0 / profile.message_interval).expect("validated");
    let connect_fail = rng.random::<f64>() < profile.connect_fail_prob;
    let leave_at = arrive_at + ms(stay.sample(rng)).max(1);
    let mut posts = Vec::new();
    if !connect_fail {
        let mut t = arrive_at + ms(gap.sample(rng));
        while t < leave_at {
            posts.push(PlannedPost { at: t, on_topic: rng.random::<f64>() < profile.on_topic_prob });
            t += ms(gap.sample(rng)).max(1);
        }
    }
    BotPlan { name, arrive_at, leave_at, connect_fail, posts, text_seed: rng.random() }
}

/// Poisson arrivals over `[0, duration_ms)`. Identical profiles (including
/// the seed) give identical schedules.
pub fn schedule_bots(profile: &BotProfile, duration_ms: Millis) -> Result<Vec<BotPlan>, SimError> {
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let inter = Exp::new(profile.arrival_rate / 60_000.0).expect("validated");
    let mut plans = Vec::new();
    let mut t = ms(inter.sample(&mut rng) / 1000.0);
    while t < duration_ms {
        let plan = plan_bot(profile, bot_name(plans.len()), t, &mut rng);
        plans.push(plan);
        t += ms(inter.sample(&mut rng) / 1000.0).max(1);
    }
    Ok(plans)
}

/// Word source for bot messages.
#[derive(Debug, Clone)]
pub struct TextGen {
    off_topic: Vec<String>,
}

impl Default for TextGen {
    fn default() -> Self {
        TextGen { off_topic: OFF_TOPIC_WORDS.split_whitespace().map(str::to_owned).collect() }
    }
}

impl TextGen {
    pub fn off_topic_words(&self) -> &[String] {
        &self.off_topic
    }

    /// On-topic messages sample content words of `prompt`; off-topic ones, or
    /// any message while no prompt is known, draw from the off-topic list.
    pub fn compose(&self, rng: &mut impl Rng, prompt: Option<&str>, on_topic: bool) -> String {
        let n = rng.random_range(3..=6);
        let prompt_terms = prompt.map(tokenize).unwrap_or_default();
        let pool: &[String] = if on_topic && !prompt_terms.is_empty() { &prompt_terms } else { &self.off_topic };
        (0..n).map(|_| pool[rng.random_range(0..pool.len())].as_str()).collect::<Vec<_>>().join(" ")
    }
}

/// Per-bot text RNG.
pub fn text_rng(plan: &BotPlan) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(plan.text_seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chatcore::FacilitationScript;
    use crate::facilitator::relevance;

    #[test]
    fn same_seed_same_schedule() {
        let p = BotProfile { arrival_rate: 2.0, seed: 11, ..Default::default() };
        assert_eq!(schedule_bots(&p, 3_600_000).unwrap(), schedule_bots(&p, 3_600_000).unwrap());
        let q = BotProfile { seed: 12, ..p.clone() };
        assert_ne!(schedule_bots(&p, 3_600_000).unwrap(), schedule_bots(&q, 3_600_000).unwrap());
    }

    #[test]
    fn arrival_count_matches_rate() {
        // 2/min over 10 hours: 1200 expected, sd ~35.
        let p = BotProfile { arrival_rate: 2.0, seed: 3, ..Default::default() };
        let n = schedule_bots(&p, 36_000_000).unwrap().len() as f64;
        assert!((n - 1200.0).abs() < 4.0 * 1200f64.sqrt(), "{n}");
    }

    #[test]
    fn posts_fall_inside_the_stay() {
        let p = BotProfile { arrival_rate: 1.0, message_interval: 5.0, seed: 5, ..Default::default() };
        for plan in schedule_bots(&p, 3_600_000).unwrap() {
            assert!(plan.leave_at > plan.arrive_at);
            assert!(plan.posts.iter().all(|m| m.at >= plan.arrive_at && m.at < plan.leave_at));
            assert!(plan.posts.windows(2).all(|w| w[0].at < w[1].at));
        }
    }

    #[test]
    fn invalid_profiles() {
        assert!(BotProfile { on_topic_prob: 1.5, ..Default::default() }.validate().is_err());
        assert!(BotProfile { arrival_rate: 0.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn off_topic_words_avoid_script_vocabulary() {
        let script = FacilitationScript::sample();
        let gen = TextGen::default();
        for t in &script.topics {
            for term in tokenize(&t.prompt).into_iter().chain(t.pokes.iter().flat_map(|p| tokenize(p))) {
                assert!(!gen.off_topic_words().contains(&term), "{term} is in the off-topic list");
            }
        }
    }

    #[test]
    fn on_topic_text_clears_threshold() {
        let script = FacilitationScript::sample();
        let gen = TextGen::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for t in &script.topics {
            for _ in 0..50 {
                let msg = gen.compose(&mut rng, Some(&t.prompt), true);
                assert!(relevance(&[msg], &t.prompt).value >= script.relevance_threshold);
                let off = gen.compose(&mut rng, Some(&t.prompt), false);
                assert_eq!(relevance(&[off], &t.prompt).value, 0.0);
            }
        }
    }
}
