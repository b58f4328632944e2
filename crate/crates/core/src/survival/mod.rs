//! Discrete-time survival model: pooled logistic regression of Drop on
//! person-period predictors, reported as hazard ratios.

mod fit;
mod interpret;
pub mod model;
mod report;

use thiserror::Error;

pub use fit::{fit, fit_design, wald_p, Coefficient, FitOptions, SurvivalFit};
pub use interpret::{format_sig2, interpret, Direction, HazardInterpretation};
pub use model::Design;
pub use report::{format_hr, format_p, report_table, TABLE_ROWS};

#[derive(Debug, Error)]
pub enum FitError {
    #[error("panel is empty")]
    EmptyPanel,
    #[error("unknown predictor column {0:?}")]
    UnknownPredictor(String),
    #[error("NoEvents: the outcome never occurs (drop is always 0)")]
    NoEvents,
    #[error("AllEvents: the outcome always occurs (drop is always 1)")]
    AllEvents,
    #[error("Collinear: {0}")]
    Collinear(String),
    #[error("hazard ratio must be positive, got {0}")]
    NonPositiveRatio(f64),
}

/// Writes `fit.csv` rows: name, coefficient, hazard_ratio, standard_error, wald_z, p_value.
pub fn write_fit_csv(
    path: impl AsRef<std::path::Path>,
    fit: &SurvivalFit,
) -> Result<(), crate::analytics::AnalyticsError> {
    crate::analytics::write_csv(path, &fit.coefficients, "name,coefficient,hazard_ratio,standard_error,wald_z,p_value")
}
