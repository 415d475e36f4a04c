//! Log-log least squares with classical inference, regime classification and
//! bootstrap intervals.

mod bootstrap;
mod ols;
mod special;

pub use bootstrap::{bootstrap_ci, ConfidenceInterval, MIN_REPLICATES};
pub use ols::{
    classify_regime, fit_log_space, fit_loglog, fit_loglog_with, significance_stars, FitResult,
    ScalingRegime, SeKind, SUBLINEAR_BELOW, SUPERLINEAR_ABOVE,
};
pub use special::{ln_beta, ln_gamma, reg_inc_beta, student_t_two_sided_p};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("a fit needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("point {index} has a non-positive or non-finite value")]
    NonPositiveValue { index: usize },
    #[error("all size values are equal; the slope is undefined")]
    DegenerateInput,
    #[error("degrees of freedom must be >= 1, got {0}")]
    InvalidDf(f64),
    #[error("{0}")]
    InvalidArgument(String),
    #[error("{degenerate} of {replicates} bootstrap resamples were degenerate")]
    DegenerateResamples { degenerate: usize, replicates: usize },
    #[error("incomplete beta continued fraction did not converge (a = {a}, b = {b}, x = {x})")]
    NoConvergence { a: f64, b: f64, x: f64 },
}
