use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::model::{information, log_likelihood, logit, score, Design};
use super::FitError;
use crate::analytics::PersonPeriod;

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Converged when every score component is below this.
    pub score_tolerance: f64,
    /// ...or when no coefficient moves more than this.
    pub step_tolerance: f64,
    /// |coefficient| beyond this with a live gradient means separation.
    pub separation_bound: f64,
    pub separation_ridge: f64,
    pub max_halvings: usize,
    pub week_effects: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 100,
            score_tolerance: 1e-8,
            step_tolerance: 1e-10,
            separation_bound: 15.0,
            separation_ridge: 1e-4,
            max_halvings: 40,
            week_effects: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    /// Log-odds of dropping.
    pub coefficient: f64,
    pub hazard_ratio: f64,
    pub standard_error: f64,
    pub wald_z: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalFit {
    /// Intercept first, then predictors in the requested order.
    pub coefficients: Vec<Coefficient>,
    pub log_likelihood: f64,
    pub n_rows: usize,
    pub n_events: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Set when separation forced the ridge-penalized refit.
    pub ridge_penalized: bool,
    /// Log-likelihood after each accepted Newton step, starting point first.
    pub ll_trace: Vec<f64>,
}

impl SurvivalFit {
    pub fn get(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    pub fn hazard_ratio(&self, name: &str) -> Option<f64> {
        self.get(name).map(|c| c.hazard_ratio)
    }
}

/// Two-sided normal tail probability of a Wald statistic.
pub fn wald_p(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

/// Fits the discrete-time hazard model of `drop` on the named panel columns.
pub fn fit<S: AsRef<str>>(
    panel: &[PersonPeriod],
    predictors: &[S],
    opts: &FitOptions,
) -> Result<SurvivalFit, FitError> {
    let design = Design::from_panel(panel, predictors, opts.week_effects)?;
    fit_design(&design, opts)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Rejects designs whose columns are linearly dependent (including constant
/// or all-zero predictors alongside the intercept).
fn check_rank(d: &Design) -> Result<(), FitError> {
    let p = d.n_params();
    let mut gram = DMatrix::<f64>::zeros(p, p);
    for i in 0..d.n_rows() {
        let x = d.row(i);
        for a in 0..p {
            for b in a..p {
                gram[(a, b)] += x[a] * x[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
    }
    let norms: Vec<f64> = (0..p).map(|j| gram[(j, j)].sqrt()).collect();
    if let Some(j) = norms.iter().position(|&n| n == 0.0) {
        return Err(FitError::Collinear(format!("column {} is identically zero", d.names[j])));
    }
    let scaled = DMatrix::from_fn(p, p, |a, b| gram[(a, b)] / (norms[a] * norms[b]));
    let eig = SymmetricEigen::new(scaled).eigenvalues;
    let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    if lo <= hi * 1e-10 {
        return Err(FitError::Collinear(format!(
            "design matrix is rank deficient (condition {:.3e})",
            hi / lo.max(f64::MIN_POSITIVE)
        )));
    }
    Ok(())
}

struct NewtonRun {
    beta: Vec<f64>,
    info: DMatrix<f64>,
    converged: bool,
    iterations: usize,
    separated: bool,
    ll_trace: Vec<f64>,
}

fn newton(d: &Design, opts: &FitOptions) -> Result<NewtonRun, FitError> {
    let p = d.n_params();
    let mut beta = vec![0.0; p];
    let base_rate = d.n_events() as f64 / d.n_rows() as f64;
    beta[0] = logit(base_rate);

    let mut ll = log_likelihood(d, &beta);
    let mut ll_trace = vec![ll];
    let mut converged = false;
    let mut separated = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        let g = score(d, &beta);
        if max_abs(&g) < opts.score_tolerance {
            converged = true;
            break;
        }
        if d.ridge == 0.0 && beta.iter().skip(1).any(|b| b.abs() > opts.separation_bound) {
            separated = true;
            break;
        }
        let info = information(d, &beta);
        let step = info
            .clone()
            .cholesky()
            .ok_or_else(|| FitError::Collinear("information matrix is not positive definite".into()))?
            .solve(&DVector::from_vec(g));
        iterations += 1;

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = beta.iter().zip(step.iter()).map(|(b, s)| b + scale * s).collect();
            let trial_ll = log_likelihood(d, &trial);
            if trial_ll.is_finite() && trial_ll >= ll {
                accepted = Some((trial, trial_ll));
                break;
            }
            scale *= 0.5;
        }
        let Some((next, next_ll)) = accepted else {
            // No ascent direction left at machine precision.
            converged = true;
            break;
        };
        let moved = max_abs(&beta.iter().zip(&next).map(|(a, b)| a - b).collect::<Vec<_>>());
        beta = next;
        ll = next_ll;
        ll_trace.push(ll);
        if moved < opts.step_tolerance {
            converged = true;
            break;
        }
    }
    if !converged && d.ridge == 0.0 && beta.iter().skip(1).any(|b| b.abs() > opts.separation_bound) {
        separated = true;
    }
    let info = information(d, &beta);
    Ok(NewtonRun { beta, info, converged, iterations, separated, ll_trace })
}

/// Newton-Raphson with step-halving on a prepared design.
pub fn fit_design(design: &Design, opts: &FitOptions) -> Result<SurvivalFit, FitError> {
    let n_events = design.n_events();
    if n_events == 0 {
        return Err(FitError::NoEvents);
    }
    if n_events == design.n_rows() {
        return Err(FitError::AllEvents);
    }
    check_rank(design)?;

    let mut run = newton(design, opts)?;
    let mut ridge_penalized = design.ridge > 0.0;
    let mut used = design;
    let penalized;
    if run.separated {
        penalized = design.clone().with_ridge(opts.separation_ridge);
        run = newton(&penalized, opts)?;
        ridge_penalized = true;
        used = &penalized;
    }

    let cov = run
        .info
        .clone()
        .try_inverse()
        .ok_or_else(|| FitError::Collinear("information matrix is singular at the optimum".into()))?;
    let coefficients = used
        .names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let coefficient = run.beta[j];
            let standard_error = cov[(j, j)].max(0.0).sqrt();
            let wald_z = coefficient / standard_error;
            Coefficient {
                name: name.clone(),
                coefficient,
                hazard_ratio: coefficient.exp(),
                standard_error,
                wald_z,
                p_value: wald_p(wald_z),
            }
        })
        .collect();
    Ok(SurvivalFit {
        coefficients,
        log_likelihood: log_likelihood(used, &run.beta),
        n_rows: used.n_rows(),
        n_events,
        converged: run.converged,
        iterations: run.iterations,
        ridge_penalized,
        ll_trace: run.ll_trace,
    })
}
