//! Robust estimation and testing for non-destructive one-shot devices
//! under step-stress accelerated life tests with exponential lifetimes.
//!
//! The model follows the cumulative exposure assumption with a log-linear
//! stress-hazard link. Estimation minimizes the density power divergence
//! between empirical and model cell probabilities, optionally under a
//! linear parameter restriction; the tuning parameter trades efficiency
//! at the model for robustness against outlying cells. On top of the
//! estimators sit asymptotic covariances, influence-function diagnostics,
//! score-type and divergence-based hypothesis tests, and a Monte Carlo
//! simulation harness.

pub mod dpd;
pub mod error;
pub mod estimate;
pub mod exec;
pub mod htest;
pub mod influence;
pub mod io;
pub mod linalg;
pub mod model;
pub mod optim;
pub mod sim;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result, Warning};
pub use estimate::{
    fit_mdpde, fit_restricted_mdpde, restricted_covariance, unrestricted_covariance,
    FitOptions, FitResult, LinearConstraint,
};
pub use model::{
    exposure_shifts, failure_probabilities, hazard_rates, lifetime_cdf, CellProbabilities,
    ModelParams, StressPlan,
};
