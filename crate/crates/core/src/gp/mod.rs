//! Gaussian-process regression with a squared-exponential correlation,
//! homoscedastic noise and maximum-likelihood hyperparameters.
//!
//! The covariance between two inputs is `sigma2 * R(x, x')` with
//! `R(x, x') = exp(-sum_i 10^omega_i (x_i - x'_i)^2)`. Observation noise enters
//! the correlation matrix as `R + delta2 * I`, so the physical noise variance
//! is `sigma2 * delta2`. The prior mean is zero.
//!
//! Inputs are affinely mapped to the unit box before fitting; the map is kept
//! in the [`TrainedGP`] so callers always work in physical units.

mod dataset;
mod fit;
mod kernel;
mod model;
mod persist;

pub use dataset::{Column, Dataset, Standardization};
pub use fit::{fit, log_likelihood, FitConfig, FitReport};
pub use kernel::{build_covariance, correlation};
pub use model::{Hyperparameters, Prediction, TrainedGP};
pub use persist::GP_FORMAT;

/// Largest relative jitter added to the correlation diagonal before a
/// factorization is declared failed.
pub const MAX_JITTER: f64 = 1e-6;
/// First jitter tried (relative to the mean diagonal); doubled on each retry.
pub const MIN_JITTER: f64 = 1e-10;
