use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::path::Path;

use super::SimError;
use crate::analytics::{PersonPeriod, PREDICTOR_COLUMNS};
use crate::survival::model::{logit, sigmoid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PredictorDistribution {
    Bernoulli { p: f64 },
    Normal { mean: f64, sd: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPredictor {
    /// A panel column: video_clicks_z, malfunction, alone, pair or group.
    pub name: String,
    pub log_hazard_ratio: f64,
    pub distribution: PredictorDistribution,
}

impl SyntheticPredictor {
    pub fn bernoulli(name: &str, hazard_ratio: f64, p: f64) -> Self {
        SyntheticPredictor {
            name: name.to_owned(),
            log_hazard_ratio: hazard_ratio.ln(),
            distribution: PredictorDistribution::Bernoulli { p },
        }
    }

    pub fn normal(name: &str, hazard_ratio: f64) -> Self {
        SyntheticPredictor {
            name: name.to_owned(),
            log_hazard_ratio: hazard_ratio.ln(),
            distribution: PredictorDistribution::Normal { mean: 0.0, sd: 1.0 },
        }
    }
}

/// Ground truth for a generated person-period panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPanelSpec {
    pub n_students: usize,
    pub n_weeks: u32,
    /// Weekly drop probability with every predictor at zero.
    pub baseline_hazard: f64,
    pub predictors: Vec<SyntheticPredictor>,
    pub seed: u64,
}

impl SyntheticPanelSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidPanelSpec(m));
        if !(self.baseline_hazard > 0.0 && self.baseline_hazard < 1.0) {
            return bad(format!("baseline_hazard must be in (0, 1), got {}", self.baseline_hazard));
        }
        if self.predictors.is_empty() {
            return bad("at least one predictor is required".into());
        }
        if self.n_students == 0 || self.n_weeks == 0 {
            return bad("n_students and n_weeks must be positive".into());
        }
        for (i, p) in self.predictors.iter().enumerate() {
            if !PREDICTOR_COLUMNS.contains(&p.name.as_str()) {
                return bad(format!("unknown predictor {:?}", p.name));
            }
            if self.predictors[..i].iter().any(|q| q.name == p.name) {
                return bad(format!("predictor {:?} listed twice", p.name));
            }
            if !p.log_hazard_ratio.is_finite() {
                return bad(format!("predictor {:?} has a non-finite coefficient", p.name));
            }
            match p.distribution {
                PredictorDistribution::Bernoulli { p: q } if !(0.0..=1.0).contains(&q) => {
                    return bad(format!("predictor {:?}: p must be in [0, 1]", p.name))
                }
                PredictorDistribution::Normal { sd, .. } if sd.is_nan() || sd < 0.0 => {
                    return bad(format!("predictor {:?}: sd must be non-negative", p.name))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self, SimError> {
        let spec: Self = toml::from_str(s).map_err(|e| SimError::InvalidPanelSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

fn set_column(row: &mut PersonPeriod, name: &str, v: f64) {
    match name {
        "video_clicks_z" => row.video_clicks_z = v,
        "malfunction" => row.malfunction = (v != 0.0) as u8,
        "alone" => row.alone = (v != 0.0) as u8,
        "pair" => row.pair = (v != 0.0) as u8,
        "group" => row.group = (v != 0.0) as u8,
        _ => unreachable!("validated"),
    }
}

/// Draws a person-period panel from the discrete-time logistic hazard model.
///
/// Each week a student survives, predictors are drawn fresh and the student
/// drops with probability `sigmoid(logit(baseline) + sum(beta * x))`. Students
/// who never drop get exactly `n_weeks` rows.
pub fn gen_panel(spec: &SyntheticPanelSpec) -> Result<Vec<PersonPeriod>, SimError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let intercept = logit(spec.baseline_hazard);
    let width = (spec.n_students.max(1) as f64).log10() as usize + 1;
    let mut rows = Vec::new();
    for s in 0..spec.n_students {
        let student = format!("s{s:0width$}");
        for week in 0..spec.n_weeks {
            let mut row = PersonPeriod {
                student: student.clone(),
                week_index: week,
                video_clicks_z: 0.0,
                malfunction: 0,
                alone: 0,
                pair: 0,
                group: 0,
                drop: 0,
            };
            let mut eta = intercept;
            for p in &spec.predictors {
                let x = match p.distribution {
                    PredictorDistribution::Bernoulli { p } => f64::from(u8::from(rng.random::<f64>() < p)),
                    PredictorDistribution::Normal { mean, sd } => {
                        Normal::new(mean, sd).expect("validated").sample(&mut rng)
                    }
                };
                set_column(&mut row, &p.name, x);
                eta += p.log_hazard_ratio * x;
            }
            let dropped = rng.random::<f64>() < sigmoid(eta);
            row.drop = dropped as u8;
            rows.push(row);
            if dropped {
                break;
            }
        }
    }
    Ok(rows)
}
