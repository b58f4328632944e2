mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rollingchat_core::analytics::{
    anova_oneway, build_panel, classify_room, classify_sessions, group_time_stats, two_proportion_ztest,
    AnalyticsError, Category, WEEK_MS,
};
use rollingchat_core::chatcore::{EventKind, FacilitationScript};
use rollingchat_core::simharness::{simulate_course, CourseSpec};

#[test]
fn max_peers_matches_interval_sweep() {
    for seed in 0..1000 {
        let log = common::random_room_log(seed, 120);
        let oracle = common::brute_force_max_peers(&log);
        let sessions = classify_room(&log).unwrap();
        let fails = log.iter().filter(|e| e.kind == EventKind::ConnectFail).count();
        assert_eq!(sessions.iter().filter(|s| s.category == Category::Malfunction).count(), fails);
        let mut checked = 0;
        for s in sessions.iter().filter(|s| s.category != Category::Malfunction) {
            let want = oracle[&(s.student.clone(), s.entered_at)];
            assert_eq!(s.max_peers, want, "seed {seed}: {} at {}", s.student, s.entered_at);
            let expected_cat = match want {
                0 => Category::Alone,
                1 => Category::Pair,
                _ => Category::Group,
            };
            assert_eq!(s.category, expected_cat);
            assert!(s.time_spent >= 0.0);
            checked += 1;
        }
        assert_eq!(checked, oracle.len());
    }
}

fn random_groups(rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let k = rng.random_range(2..6);
    (0..k)
        .map(|_| {
            let n = rng.random_range(2..40);
            let shift = rng.random_range(-50.0..50.0);
            (0..n).map(|_| shift + rng.random_range(0.0..1000.0)).collect()
        })
        .collect()
}

#[test]
fn anova_matches_textbook_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(2016);
    for i in 0..100 {
        let groups = random_groups(&mut rng);
        let got = anova_oneway(&groups).unwrap();
        let (f, p) = common::anova_oracle(&groups);
        assert!((got.f - f).abs() <= 1e-10 * f.max(1.0), "fixture {i}: F {} vs {f}", got.f);
        assert!((got.p - p).abs() <= 1e-10, "fixture {i}: p {} vs {p}", got.p);
        let n: usize = groups.iter().map(Vec::len).sum();
        assert_eq!((got.df_between, got.df_within), (groups.len() - 1, n - groups.len()));
    }
}

#[test]
fn anova_edge_cases() {
    let same = vec![vec![1.0, 2.0, 3.0]; 3];
    let a = anova_oneway(&same).unwrap();
    assert_eq!(a.f, 0.0);
    assert!((a.p - 1.0).abs() < 1e-12);
    let flat = vec![vec![0.0, 0.0], vec![10.0, 10.0]];
    assert!(matches!(anova_oneway(&flat), Err(AnalyticsError::DegenerateVariance)));
}

#[test]
fn ztest_matches_pooled_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for i in 0..100 {
        let n1 = rng.random_range(5..5000);
        let n2 = rng.random_range(5..5000);
        let x1 = rng.random_range(0..=n1);
        let x2 = rng.random_range(0..=n2);
        if x1 + x2 == 0 || x1 + x2 == n1 + n2 {
            continue;
        }
        let got = two_proportion_ztest(x1, n1, x2, n2).unwrap();
        let (z, p) = common::ztest_oracle(x1, n1, x2, n2);
        assert!((got.z - z).abs() <= 1e-10 * z.abs().max(1.0), "fixture {i}");
        assert!((got.p_two_sided - p).abs() <= 1e-10, "fixture {i}: {} vs {p}", got.p_two_sided);
    }
    // Worked example: p1 = .058, p2 = .029, pooled .0435.
    let got = two_proportion_ztest(58, 1000, 29, 1000).unwrap();
    let z = 0.029 / (0.0435f64 * 0.9565 * 0.002).sqrt();
    assert!((got.z - z).abs() < 1e-10, "{} vs {z}", got.z);

    let eq = two_proportion_ztest(10, 100, 30, 300).unwrap();
    assert_eq!(eq.z, 0.0);
    assert_eq!(eq.p_two_sided, 1.0);
    assert!(matches!(two_proportion_ztest(0, 5, 0, 5), Err(AnalyticsError::ZeroPooledVariance)));
}

#[test]
fn simulated_course_panel_invariants() {
    let spec = CourseSpec { n_students: 150, n_weeks: 6, chat_prob: 0.3, ..CourseSpec::demo(11) };
    let data = simulate_course(&spec, &FacilitationScript::sample()).unwrap();
    let logs: Vec<_> = data.logs.iter().map(|l| l.events.clone()).collect();
    let sessions = classify_sessions(&logs).unwrap();
    assert!(sessions.windows(2).all(|w| (w[0].entered_at, &w[0].student) <= (w[1].entered_at, &w[1].student)));
    let stats = group_time_stats(&sessions).unwrap();
    assert_eq!(stats.len(), 3);
    let counted: usize = stats.iter().map(|g| g.n).sum();
    assert_eq!(counted, sessions.iter().filter(|s| s.category != Category::Malfunction).count());

    let panel = build_panel(&sessions, &data.clicks, spec.course_start, spec.n_weeks).unwrap();
    let n = panel.len() as f64;
    let mean = panel.iter().map(|r| r.video_clicks_z).sum::<f64>() / n;
    let sd = (panel.iter().map(|r| (r.video_clicks_z - mean).powi(2)).sum::<f64>() / n).sqrt();
    assert!(mean.abs() < 1e-9 && (sd - 1.0).abs() < 1e-9, "mean {mean} sd {sd}");

    // Drops land on final rows, and equal the students whose last active
    // week falls before the final observed week.
    let mut last_week = std::collections::BTreeMap::new();
    for c in &data.clicks {
        let w = (c.ts - spec.course_start) / WEEK_MS;
        let e = last_week.entry(c.student.clone()).or_insert(w);
        *e = (*e).max(w);
    }
    let expected_drops = last_week.values().filter(|&&w| w + 1 < spec.n_weeks as i64).count();
    assert_eq!(panel.iter().map(|r| r.drop as usize).sum::<usize>(), expected_drops);
    assert_eq!(expected_drops, data.dropped.len());
    for w in panel.windows(2) {
        if w[0].drop == 1 {
            assert_ne!(w[0].student, w[1].student);
        }
    }
}
