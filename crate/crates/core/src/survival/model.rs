//! Pooled logistic likelihood for person-period data.
//!
//! With linear predictor `eta = x'beta` and `mu = 1 / (1 + exp(-eta))`:
//!
//! ```text
//! ll(beta)    = sum_i  y_i * eta_i - log(1 + exp(eta_i))   - ridge/2 * |beta_-0|^2
//! score(beta) = sum_i (y_i - mu_i) x_i                      - ridge * beta_-0
//! info(beta)  = sum_i  mu_i (1 - mu_i) x_i x_i'             + ridge * I_-0
//! ```
//!
//! The intercept (column 0) is never penalized.

use nalgebra::{DMatrix, DVector};

use super::FitError;
use crate::analytics::PersonPeriod;

pub const INTERCEPT: &str = "intercept";

/// Row-major design matrix with a leading intercept column.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub names: Vec<String>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub ridge: f64,
}

impl Design {
    /// `rows` are predictor values without the intercept.
    pub fn new(predictors: Vec<String>, rows: &[Vec<f64>], y: Vec<f64>) -> Result<Self, FitError> {
        if rows.is_empty() {
            return Err(FitError::EmptyPanel);
        }
        let p = predictors.len() + 1;
        let mut x = Vec::with_capacity(rows.len() * p);
        for r in rows {
            assert_eq!(r.len(), p - 1, "row width must match predictor count");
            x.push(1.0);
            x.extend_from_slice(r);
        }
        let mut names = vec![INTERCEPT.to_owned()];
        names.extend(predictors);
        Ok(Design { names, x, y, ridge: 0.0 })
    }

    /// Columns taken from a person-period panel. With `week_effects`, one
    /// dummy per week after the first observed week is appended.
    pub fn from_panel<S: AsRef<str>>(
        panel: &[PersonPeriod],
        predictors: &[S],
        week_effects: bool,
    ) -> Result<Self, FitError> {
        if panel.is_empty() {
            return Err(FitError::EmptyPanel);
        }
        let mut names: Vec<String> = Vec::new();
        for p in predictors {
            let p = p.as_ref();
            if panel[0].predictor(p).is_none() {
                return Err(FitError::UnknownPredictor(p.to_owned()));
            }
            names.push(p.to_owned());
        }
        let weeks: Vec<u32> = if week_effects {
            let mut w: Vec<u32> = panel.iter().map(|r| r.week_index).collect();
            w.sort_unstable();
            w.dedup();
            w.into_iter().skip(1).collect()
        } else {
            Vec::new()
        };
        names.extend(weeks.iter().map(|w| format!("week_{w}")));

        let rows: Vec<Vec<f64>> = panel
            .iter()
            .map(|r| {
                let mut row: Vec<f64> = predictors.iter().map(|p| r.predictor(p.as_ref()).expect("checked")).collect();
                row.extend(weeks.iter().map(|&w| f64::from(u8::from(r.week_index == w))));
                row
            })
            .collect();
        let y = panel.iter().map(|r| f64::from(r.drop)).collect();
        Design::new(names, &rows, y)
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_params(&self) -> usize {
        self.names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_params();
        &self.x[i * p..(i + 1) * p]
    }

    pub fn n_events(&self) -> usize {
        self.y.iter().filter(|&&v| v > 0.5).count()
    }

    pub fn with_ridge(mut self, ridge: f64) -> Self {
        self.ridge = ridge;
        self
    }

    fn eta(&self, i: usize, beta: &[f64]) -> f64 {
        self.row(i).iter().zip(beta).map(|(x, b)| x * b).sum()
    }

    fn penalty(&self, beta: &[f64]) -> f64 {
        0.5 * self.ridge * beta.iter().skip(1).map(|b| b * b).sum::<f64>()
    }
}

/// log(1 + exp(t)) without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub fn log_likelihood(d: &Design, beta: &[f64]) -> f64 {
    let ll: f64 = (0..d.n_rows())
        .map(|i| {
            let eta = d.eta(i, beta);
            d.y[i] * eta - softplus(eta)
        })
        .sum();
    ll - d.penalty(beta)
}

pub fn score(d: &Design, beta: &[f64]) -> Vec<f64> {
    let p = d.n_params();
    let mut g = vec![0.0; p];
    for i in 0..d.n_rows() {
        let r = d.y[i] - sigmoid(d.eta(i, beta));
        for (gj, xj) in g.iter_mut().zip(d.row(i)) {
            *gj += r * xj;
        }
    }
    for j in 1..p {
        g[j] -= d.ridge * beta[j];
    }
    g
}

/// Observed information: the negated Hessian of [`log_likelihood`].
pub fn information(d: &Design, beta: &[f64]) -> DMatrix<f64> {
    let p = d.n_params();
    let mut h = DMatrix::<f64>::zeros(p, p);
    for i in 0..d.n_rows() {
        let mu = sigmoid(d.eta(i, beta));
        let w = mu * (1.0 - mu);
        let x = d.row(i);
        for a in 0..p {
            let wa = w * x[a];
            if wa == 0.0 {
                continue;
            }
            for b in a..p {
                h[(a, b)] += wa * x[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            h[(a, b)] = h[(b, a)];
        }
    }
    for j in 1..p {
        h[(j, j)] += d.ridge;
    }
    h
}

pub fn score_and_information(d: &Design, beta: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    (DVector::from_vec(score(d, beta)), information(d, beta))
}
