//! Robust and reliability-based compromise decision support on chained
//! Gaussian-process surrogates.
//!
//! The crate is organised bottom-up:
//!
//! - [`gp`]: squared-exponential GP regression with maximum-likelihood fitting.
//! - [`process`]: analytic hot-rod-rolling stage models used as ground truth.
//! - [`network`]: chains of surrogates with Monte Carlo uncertainty propagation.
//! - [`cdsp`]: error margin index, deviation variables, admissible sets and the
//!   robust / reliability solvers.
//! - [`harness`]: the four training-data cases and the experiment matrix.
//! - [`io`]: configuration, atomic writes and artifact manifests.

pub mod cdsp;
pub mod error;
pub mod gp;
pub mod harness;
pub mod io;
pub mod network;
pub mod optimize;
pub mod process;
pub mod rng;

pub use error::{Error, Result};
