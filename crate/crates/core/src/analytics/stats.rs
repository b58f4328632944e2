use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};
use statrs::function::erf::erfc;

use super::sessions::{Category, SessionFeatures};
use super::AnalyticsError;

pub fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

/// Sample standard deviation (n - 1 denominator); needs two values.
pub fn sample_sd(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs)?;
    let ss: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    Some((ss / (xs.len() - 1) as f64).sqrt())
}

/// Lower median: the exact order statistic, the smaller middle value for even n.
pub fn lower_median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(sorted[(sorted.len() - 1) / 2])
}

/// Time-in-chat summary for one room-size group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub group_label: String,
    pub n: usize,
    pub mean_time: Option<f64>,
    pub sd_time: Option<f64>,
    pub median_time: Option<f64>,
}

impl GroupStats {
    pub fn from_times(label: &str, times: &[f64]) -> Self {
        GroupStats {
            group_label: label.to_owned(),
            n: times.len(),
            mean_time: mean(times),
            sd_time: sample_sd(times),
            median_time: lower_median(times),
        }
    }
}

pub const GROUP_LABELS: [&str; 3] = ["1", "2", "3+"];

/// Room-size group index (0 → "1", 1 → "2", 2 → "3+"), `None` for Malfunction.
pub fn room_size_group(s: &SessionFeatures) -> Option<usize> {
    (s.category != Category::Malfunction).then(|| (s.max_peers as usize).min(2))
}

/// Session times grouped by room size (max_peers + 1), Malfunction excluded.
pub fn times_by_room_size(sessions: &[SessionFeatures]) -> [Vec<f64>; 3] {
    let mut groups: [Vec<f64>; 3] = Default::default();
    for s in sessions {
        if let Some(g) = room_size_group(s) {
            groups[g].push(s.time_spent);
        }
    }
    groups
}

/// Mean, sample sd and median of session time for rooms of 1, 2 and 3+ students.
/// Groups without sessions come back as `n = 0` rows.
pub fn group_time_stats(sessions: &[SessionFeatures]) -> Result<Vec<GroupStats>, AnalyticsError> {
    if sessions.is_empty() {
        return Err(AnalyticsError::EmptyInput);
    }
    let groups = times_by_room_size(sessions);
    Ok(GROUP_LABELS.iter().zip(groups.iter()).map(|(l, t)| GroupStats::from_times(l, t)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anova {
    pub f: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub p: f64,
}

/// Classical one-way ANOVA.
pub fn anova_oneway<G: AsRef<[f64]>>(groups: &[G]) -> Result<Anova, AnalyticsError> {
    let k = groups.len();
    if k < 2 {
        return Err(AnalyticsError::InvalidInput(format!("ANOVA needs at least 2 groups, got {k}")));
    }
    if let Some(i) = groups.iter().position(|g| g.as_ref().is_empty()) {
        return Err(AnalyticsError::InvalidInput(format!("ANOVA group {i} is empty")));
    }
    let n: usize = groups.iter().map(|g| g.as_ref().len()).sum();
    if n <= k {
        return Err(AnalyticsError::InvalidInput(format!("ANOVA needs more than {k} values, got {n}")));
    }
    let within_constant = groups.iter().all(|g| {
        let g = g.as_ref();
        g.iter().all(|&x| x == g[0])
    });
    if within_constant {
        return Err(AnalyticsError::DegenerateVariance);
    }

    let grand = groups.iter().flat_map(|g| g.as_ref().iter()).sum::<f64>() / n as f64;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in groups {
        let g = g.as_ref();
        let m = g.iter().sum::<f64>() / g.len() as f64;
        ss_between += g.len() as f64 * (m - grand).powi(2);
        ss_within += g.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    }
    let df_between = k - 1;
    let df_within = n - k;
    let f = (ss_between / df_between as f64) / (ss_within / df_within as f64);
    let dist = FisherSnedecor::new(df_between as f64, df_within as f64)
        .map_err(|e| AnalyticsError::InvalidInput(e.to_string()))?;
    let p = if f <= 0.0 { 1.0 } else { dist.sf(f) };
    Ok(Anova { f, df_between, df_within, p })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZTest {
    pub z: f64,
    pub p_two_sided: f64,
}

/// Pooled two-proportion z-test of x1/n1 against x2/n2.
pub fn two_proportion_ztest(x1: u64, n1: u64, x2: u64, n2: u64) -> Result<ZTest, AnalyticsError> {
    if n1 == 0 || n2 == 0 || x1 > n1 || x2 > n2 {
        return Err(AnalyticsError::InvalidInput(format!("need 0 <= x <= n and n > 0, got {x1}/{n1} and {x2}/{n2}")));
    }
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let pooled = (x1 + x2) as f64 / (n1f + n2f);
    if pooled == 0.0 || pooled == 1.0 {
        return Err(AnalyticsError::ZeroPooledVariance);
    }
    let se = (pooled * (1.0 - pooled) * (1.0 / n1f + 1.0 / n2f)).sqrt();
    let z = (x1 as f64 / n1f - x2 as f64 / n2f) / se;
    let p_two_sided = erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0);
    Ok(ZTest { z, p_two_sided })
}
