//! Trace generators and independent oracles shared by the property suites
//! and the acceptance target.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rollingchat_core::analytics::PersonPeriod;
use rollingchat_core::chatcore::{EventKind, FacilitationScript, Millis, RoomEvent, RoomState, TopicId};
use rollingchat_core::facilitator::{tokenize, ActionKind, Facilitator};
use rollingchat_core::simharness::{SyntheticPanelSpec, SyntheticPredictor, TextGen};
use rollingchat_core::survival::model::{information, log_likelihood, score};
use rollingchat_core::survival::Design;

pub const ROOM: &str = "main";
pub const NAMES: [&str; 6] = ["ana", "ben", "caz", "dev", "eli", "fay"];

/// Sample script with shorter topics so traces see advances, summaries and
/// an exhausted script.
pub fn trace_script() -> FacilitationScript {
    let mut s = FacilitationScript::sample();
    for t in &mut s.topics {
        t.duration_s = 240;
    }
    s
}

pub fn facilitator() -> Facilitator {
    Facilitator::new(trace_script(), ROOM)
}

/// A randomized join/leave/message/clock run, ticked at 1 Hz while the room
/// is occupied. Returns every logged event and the end state.
pub struct Trace {
    pub events: Vec<RoomEvent>,
    pub state: RoomState,
    pub end: Millis,
}

pub fn random_trace(f: &Facilitator, seed: u64, steps: usize) -> Trace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let texts = TextGen::default();
    let mut state = RoomState::new();
    let mut events = Vec::new();
    let mut now: Millis = 0;
    for _ in 0..steps {
        let gap: Millis = match rng.random_range(0..10) {
            0..=5 => rng.random_range(0..=20_000),
            6..=8 => rng.random_range(20_000..=150_000),
            _ => rng.random_range(150_000..=700_000),
        };
        let target = now + gap;
        while !state.is_empty() && (now / 1000 + 1) * 1000 <= target {
            now = (now / 1000 + 1) * 1000;
            events.extend(f.tick(&mut state, now).unwrap().events);
        }
        now = target;

        let absent: Vec<&str> = NAMES.iter().copied().filter(|n| !state.participants.contains(*n)).collect();
        let present: Vec<String> = state.participants.iter().cloned().collect();
        let choice = rng.random_range(0..10);
        if present.is_empty() || (choice < 3 && !absent.is_empty()) {
            let who = absent[rng.random_range(0..absent.len())];
            events.extend(f.on_join(&mut state, who, now).unwrap().events);
        } else if choice < 5 {
            let who = &present[rng.random_range(0..present.len())];
            events.extend(f.on_leave(&mut state, who, now).unwrap().events);
        } else {
            let who = &present[rng.random_range(0..present.len())];
            let prompt = state.topic_index.and_then(|t| f.script().topic(t)).map(|t| t.prompt.clone());
            let on_topic = rng.random_bool(0.5);
            let text = texts.compose(&mut rng, prompt.as_deref(), on_topic);
            events.extend(f.on_message(&mut state, who, &text, now).unwrap().events);
        }
    }
    Trace { events, state, end: now }
}

/// Term-frequency cosine computed directly on token multisets.
pub fn cosine_oracle(texts: &[&str], prompt: &str) -> f64 {
    let count = |ws: Vec<String>| {
        let mut m: HashMap<String, f64> = HashMap::new();
        for w in ws {
            *m.entry(w).or_default() += 1.0;
        }
        m
    };
    let a = count(texts.iter().flat_map(|t| tokenize(t)).collect());
    let b = count(tokenize(prompt));
    let dot: f64 = a.iter().map(|(k, v)| v * b.get(k).copied().unwrap_or(0.0)).sum();
    let na: f64 = a.values().map(|v| v * v).sum::<f64>().sqrt();
    let nb: f64 = b.values().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// (participant, topic) pairs delivered more than once.
pub fn repeat_deliveries(events: &[RoomEvent]) -> Vec<(String, TopicId)> {
    let mut present: BTreeSet<String> = BTreeSet::new();
    let mut seen: BTreeSet<(String, TopicId)> = BTreeSet::new();
    let mut repeats = Vec::new();
    for ev in events {
        match ev.kind {
            EventKind::Join => {
                present.insert(ev.actor.clone());
            }
            EventKind::Leave => {
                present.remove(&ev.actor);
            }
            EventKind::Prompt => {
                let t = ev.topic_id().expect("prompt carries a topic");
                for p in &present {
                    if !seen.insert((p.clone(), t)) {
                        repeats.push((p.clone(), t));
                    }
                }
            }
            _ => {}
        }
    }
    repeats
}

/// Checks each poke against the events before it: a full quiet window since
/// the topic started or the last poke, and a window that is empty or off topic.
pub fn poke_violations(events: &[RoomEvent], script: &FacilitationScript) -> Vec<String> {
    let w = script.dormancy_window_ms();
    let mut bad = Vec::new();
    let mut topic: Option<(TopicId, Millis)> = None;
    let mut last_poke: Option<Millis> = None;
    let mut messages: Vec<(Millis, String)> = Vec::new();
    for (i, ev) in events.iter().enumerate() {
        match ev.kind {
            EventKind::Reset => {
                topic = None;
                last_poke = None;
                messages.clear();
            }
            EventKind::Prompt => {
                topic = Some((ev.topic_id().unwrap(), ev.ts));
                last_poke = None;
            }
            EventKind::Message => messages.push((ev.ts, ev.text().unwrap_or_default().to_owned())),
            EventKind::Poke => {
                let t = ev.ts;
                let Some((tid, started)) = topic else {
                    bad.push(format!("event {i}: poke with no current topic"));
                    continue;
                };
                if ev.topic_id() != Some(tid) {
                    bad.push(format!("event {i}: poke for topic {:?} during topic {tid}", ev.topic_id()));
                }
                let since = last_poke.map_or(started, |p| p.max(started));
                if t - since < w {
                    bad.push(format!("event {i}: poke at {t} only {} ms after {since}", t - since));
                }
                let in_window: Vec<&str> =
                    messages.iter().filter(|(ts, _)| *ts > t - w && *ts <= t).map(|(_, s)| s.as_str()).collect();
                let prompt = &script.topic(tid).unwrap().prompt;
                if !in_window.is_empty() && cosine_oracle(&in_window, prompt) >= script.relevance_threshold {
                    bad.push(format!("event {i}: poke over an on-topic window"));
                }
                last_poke = Some(t);
            }
            _ => {}
        }
    }
    bad
}

/// Injects silence into `state` from `from`, ticking at 1 Hz for one
/// dormancy window plus a second, and checks that a poke fires exactly at
/// the ticks where it is due. Returns a violation description, if any.
pub fn injected_dormancy_violation(f: &Facilitator, state: &RoomState, from: Millis) -> Option<String> {
    let script = f.script();
    let w = script.dormancy_window_ms();
    let mut s = state.clone();
    let mut acted = false;
    let mut t = (from / 1000 + 1) * 1000;
    while t <= from + w + 1000 {
        let due = match (s.topic_index, s.topic_started_at) {
            (Some(tid), Some(started)) => {
                let topic = script.topic(tid).unwrap();
                let running = t - started < topic.duration_ms();
                let quiet = t - s.last_poke_at.map_or(started, |p| p.max(started)) >= w;
                let texts: Vec<&str> = s.window_since(t, w).map(|m| m.text.as_str()).collect();
                let off = texts.is_empty() || cosine_oracle(&texts, &topic.prompt) < script.relevance_threshold;
                running && quiet && off
            }
            _ => false,
        };
        let tr = f.tick(&mut s, t).unwrap();
        let poked = tr.actions.iter().any(|a| a.kind == ActionKind::SendPoke);
        let prompted = tr.actions.iter().any(|a| a.kind == ActionKind::SendPrompt);
        if poked != due {
            return Some(format!("tick {t}: poke emitted = {poked}, due = {due}"));
        }
        acted |= poked || prompted;
        t += 1000;
    }
    // A silent full window ends in a poke unless the script has run out.
    let exhausted = f.next_topic(&s).is_none()
        && s.topic_index.is_none_or(|tid| {
            from + w + 1000 - s.topic_started_at.unwrap() >= script.topic(tid).unwrap().duration_ms()
        });
    if !acted && !exhausted {
        return Some(format!("silence from {from} produced no agent action"));
    }
    None
}

/// Summary actions must sit directly after a join at the same instant, with
/// at least `min_topics` discussed; every such join gets exactly one.
pub fn summary_violations(events: &[RoomEvent], states: &[RoomState], min_topics: usize) -> Vec<String> {
    let is_summary = |k: EventKind| matches!(k, EventKind::SummaryRequest | EventKind::Summary);
    let mut bad = Vec::new();
    for (i, ev) in events.iter().enumerate() {
        let before = if i == 0 { RoomState::new() } else { states[i - 1].clone() };
        if is_summary(ev.kind) {
            let join_before = i > 0 && events[i - 1].kind == EventKind::Join && events[i - 1].ts == ev.ts;
            if !join_before {
                bad.push(format!("event {i}: summary not attached to a join"));
            }
            if before.topics_discussed < min_topics {
                bad.push(format!("event {i}: summary with {} topics discussed", before.topics_discussed));
            }
        }
        if ev.kind == EventKind::Join {
            let expected = states[i].topics_discussed >= min_topics;
            let got = events.get(i + 1).is_some_and(|e| is_summary(e.kind) && e.ts == ev.ts);
            if expected != got {
                bad.push(format!(
                    "event {i}: join with {} topics discussed, summary = {got}",
                    states[i].topics_discussed
                ));
            }
        }
    }
    bad
}

/// A reset appears exactly when a leave empties the room, and the state
/// right after it has no topic history for the run.
pub fn reset_violations(events: &[RoomEvent], states: &[RoomState]) -> Vec<String> {
    let mut bad = Vec::new();
    let mut present: BTreeSet<&str> = BTreeSet::new();
    for (i, ev) in events.iter().enumerate() {
        match ev.kind {
            EventKind::Join => {
                present.insert(&ev.actor);
            }
            EventKind::Leave => {
                present.remove(ev.actor.as_str());
                let next_is_reset = events.get(i + 1).is_some_and(|e| e.kind == EventKind::Reset && e.ts == ev.ts);
                if present.is_empty() != next_is_reset {
                    bad.push(format!(
                        "event {i}: room empty = {}, reset follows = {next_is_reset}",
                        present.is_empty()
                    ));
                }
            }
            EventKind::Reset => {
                let s = &states[i];
                let fresh = s.participants.is_empty()
                    && s.topic_index.is_none()
                    && s.topic_started_at.is_none()
                    && s.topics_discussed == 0
                    && s.prompt_records.is_empty()
                    && s.window.is_empty()
                    && s.last_poke_at.is_none()
                    && s.pokes_in_topic == 0;
                if !fresh {
                    bad.push(format!("event {i}: state after reset is not initial"));
                }
                if i == 0 || events[i - 1].kind != EventKind::Leave {
                    bad.push(format!("event {i}: reset not preceded by a leave"));
                }
            }
            _ => {}
        }
    }
    bad
}

/// Random room log of joins, leaves, messages and connect failures with
/// strictly increasing timestamps.
pub fn random_room_log(seed: u64, len: usize) -> Vec<RoomEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut present: BTreeSet<&str> = BTreeSet::new();
    let mut events = Vec::new();
    let mut ts: Millis = 0;
    for _ in 0..len {
        ts += rng.random_range(1..5_000);
        let who = NAMES[rng.random_range(0..NAMES.len())];
        let ev = match rng.random_range(0..10) {
            0 => RoomEvent::connect_fail(ts, ROOM, "Facilitator", who),
            1..=3 => {
                if present.insert(who) {
                    RoomEvent::join(ts, ROOM, who)
                } else {
                    present.remove(who);
                    RoomEvent::leave(ts, ROOM, who)
                }
            }
            4..=5 if present.contains(who) => {
                present.remove(who);
                RoomEvent::leave(ts, ROOM, who)
            }
            _ if present.contains(who) => RoomEvent::message(ts, ROOM, who, "hi"),
            _ => {
                present.insert(who);
                RoomEvent::join(ts, ROOM, who)
            }
        };
        events.push(ev);
    }
    events
}

/// Max peers per session by interval overlap on log positions: for each of a
/// student's own events, count other students whose [join, leave) interval
/// covers that position. Keyed by (student, join ts).
pub fn brute_force_max_peers(log: &[RoomEvent]) -> BTreeMap<(String, Millis), u32> {
    struct Interval {
        who: String,
        from: usize,
        to: usize,
    }
    let mut open: BTreeMap<String, usize> = BTreeMap::new();
    let mut intervals = Vec::new();
    for (i, ev) in log.iter().enumerate() {
        match ev.kind {
            EventKind::Join => {
                open.insert(ev.actor.clone(), i);
            }
            EventKind::Leave => {
                let from = open.remove(&ev.actor).unwrap();
                intervals.push(Interval { who: ev.actor.clone(), from, to: i });
            }
            _ => {}
        }
    }
    for (who, from) in open {
        intervals.push(Interval { who, from, to: usize::MAX });
    }
    let mut out = BTreeMap::new();
    for iv in &intervals {
        let own = (iv.from..=iv.to.min(log.len() - 1)).filter(|&k| {
            log[k].actor == iv.who && matches!(log[k].kind, EventKind::Join | EventKind::Leave | EventKind::Message)
        });
        let mut best = 0;
        for k in own {
            let peers: BTreeSet<&str> = intervals
                .iter()
                .filter(|o| o.who != iv.who && o.from < k && k < o.to)
                .map(|o| o.who.as_str())
                .collect();
            best = best.max(peers.len() as u32);
        }
        out.insert((iv.who.clone(), log[iv.from].ts), best);
    }
    out
}

/// One-way ANOVA by the textbook sums of squares, with the upper F tail
/// from a continued-fraction incomplete beta.
pub fn anova_oracle(groups: &[Vec<f64>]) -> (f64, f64) {
    let k = groups.len() as f64;
    let n: f64 = groups.iter().map(|g| g.len() as f64).sum();
    let grand: f64 = groups.iter().flatten().sum::<f64>() / n;
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    for g in groups {
        let m = g.iter().sum::<f64>() / g.len() as f64;
        ssb += g.len() as f64 * (m - grand) * (m - grand);
        ssw += g.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
    }
    let (d1, d2) = (k - 1.0, n - k);
    let f = (ssb / d1) / (ssw / d2);
    let p = reg_inc_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
    (f, p)
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos, g = 7, n = 9.
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return std::f64::consts::PI.ln() - (std::f64::consts::PI * x).sin().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + 7.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < tiny {
        d = tiny;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// Regularized incomplete beta I_x(a, b).
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let front = (ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln()).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Pooled two-proportion z with the two-sided tail integrated numerically.
pub fn ztest_oracle(x1: u64, n1: u64, x2: u64, n2: u64) -> (f64, f64) {
    let (p1, p2) = (x1 as f64 / n1 as f64, x2 as f64 / n2 as f64);
    let pooled = (x1 + x2) as f64 / (n1 + n2) as f64;
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    let z = (p1 - p2) / se;
    (z, 2.0 * normal_upper_tail(z.abs()))
}

/// Composite Simpson over [a, a + 40] of the standard normal density.
pub fn normal_upper_tail(a: f64) -> f64 {
    let n = 400_000;
    let h = 40.0 / n as f64;
    let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = phi(a) + phi(a + 40.0);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * phi(a + i as f64 * h);
    }
    s * h / 3.0
}

// Survival model oracles.

pub fn random_design(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Design {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let y: Vec<f64> = (0..n).map(|_| f64::from(u8::from(rng.random_bool(0.3)))).collect();
    Design::new((0..p).map(|j| format!("x{j}")).collect(), &rows, y).unwrap()
}

/// Largest relative gap between the analytic score and information and
/// their central differences at `beta`.
pub fn finite_difference_error(d: &Design, beta: &[f64], h: f64) -> f64 {
    let g = score(d, beta);
    let info = information(d, beta);
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
    let mut worst = 0.0f64;
    for j in 0..beta.len() {
        let mut up = beta.to_vec();
        let mut dn = beta.to_vec();
        up[j] += h;
        dn[j] -= h;
        let fd = (log_likelihood(d, &up) - log_likelihood(d, &dn)) / (2.0 * h);
        worst = worst.max(rel(fd, g[j]));
        let (gu, gd) = (score(d, &up), score(d, &dn));
        for k in 0..beta.len() {
            worst = worst.max(rel(-(gu[k] - gd[k]) / (2.0 * h), info[(k, j)]));
        }
    }
    worst
}

pub fn one_predictor_panel(rng: &mut ChaCha8Rng, n: usize) -> Vec<PersonPeriod> {
    (0..n)
        .map(|i| {
            let x: f64 = rng.random_range(-2.0..2.0);
            let p = 1.0 / (1.0 + (-(-0.5 + 0.8 * x)).exp());
            PersonPeriod {
                student: format!("s{i}"),
                week_index: 0,
                video_clicks_z: x,
                malfunction: 0,
                alone: 0,
                pair: 0,
                group: 0,
                drop: u8::from(rng.random_bool(p)),
            }
        })
        .collect()
}

pub fn ll_at(panel: &[PersonPeriod], b0: f64, b1: f64) -> f64 {
    panel
        .iter()
        .map(|r| {
            let eta = b0 + b1 * r.video_clicks_z;
            let p = 1.0 / (1.0 + (-eta).exp());
            if r.drop == 1 {
                p.ln()
            } else {
                (1.0 - p).ln()
            }
        })
        .sum()
}

/// Exhaustive search: coarse 0.05 grid over [-6, 6]^2, then a 1e-3 grid
/// around the coarse winner. The surface is concave, so the refinement
/// window contains the global grid optimum.
pub fn grid_argmax(panel: &[PersonPeriod]) -> (f64, f64) {
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..=240 {
        for j in 0..=240 {
            let (b0, b1) = (-6.0 + 0.05 * i as f64, -6.0 + 0.05 * j as f64);
            let ll = ll_at(panel, b0, b1);
            if ll > best.0 {
                best = (ll, b0, b1);
            }
        }
    }
    let (c0, c1) = (best.1, best.2);
    for i in -100..=100 {
        for j in -100..=100 {
            let (b0, b1) = (c0 + 1e-3 * i as f64, c1 + 1e-3 * j as f64);
            let ll = ll_at(panel, b0, b1);
            if ll > best.0 {
                best = (ll, b0, b1);
            }
        }
    }
    (best.1, best.2)
}

pub fn recovery_spec() -> SyntheticPanelSpec {
    SyntheticPanelSpec {
        n_students: 30_000,
        n_weeks: 12,
        baseline_hazard: 0.1,
        predictors: vec![
            SyntheticPredictor::normal("video_clicks_z", 1.0),
            SyntheticPredictor::bernoulli("malfunction", 1.7, 0.15),
            SyntheticPredictor::bernoulli("alone", 0.89, 0.3),
            SyntheticPredictor::bernoulli("pair", 0.6, 0.2),
            SyntheticPredictor::bernoulli("group", 0.8, 0.15),
        ],
        seed: 2016,
    }
}
