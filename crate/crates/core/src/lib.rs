//! Mixture transition distribution (MTD) models for time series with
//! prescribed stationary marginals, with Bayesian fitting, residual
//! diagnostics and forecasting.

pub mod diagfc;
pub mod dists;
pub mod error;
pub mod experiments;
pub mod quad;
pub mod mcmc;
pub mod mtd;
pub mod priors;
pub mod rng;
pub mod transitions;

pub use error::{Error, Result};
