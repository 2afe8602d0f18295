//! Bayesian inference for small multilayer perceptrons by Markov chain Monte Carlo.
//!
//! - [`mlp`]: networks, log-likelihoods, prior and exact gradients.
//! - [`samplers`]: random-walk Metropolis, HMC, power-posterior population
//!   sampling and an SGD ensemble baseline.
//! - [`diagnostics`]: lag autocovariances, the MINSE Monte Carlo covariance,
//!   multivariate PSRF and ESS.
//! - [`predictive`]: posterior predictive distributions and classification.
//! - [`data`]: noisy XOR generation and CSV dataset preparation.
//! - [`io`]: chain, report and grid file formats.

// `!(x > 0.0)` style checks deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod dataset;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod mlp;
pub mod predictive;
pub mod samplers;

pub use dataset::{LabeledDataset, Role};
pub use error::{Error, Result};
