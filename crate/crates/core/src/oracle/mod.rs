//! Exact and brute-force references, and the evaluation metrics.
//!
//! - [`slam_exact_forward`]: forward recursion over the joint (map, location)
//!   chain of a small grid-SLAM instance.
//! - [`kalman_filter`]: exact state posteriors and marginal likelihood of the
//!   linear-Gaussian model at a fixed θ.
//! - [`grid_posterior`]: p(θ | y) on a 1-d grid, from Kalman likelihoods or
//!   averaged particle-filter likelihood estimates.
//! - [`kl_factorized`], [`mse`], [`total_variation`]: metrics.

mod grid;
mod kalman;
mod metrics;
mod slam;

pub use grid::{grid_posterior, grid_posterior_lg, grid_posterior_pf, linspace, GridPosterior, PfLikelihood};
pub use kalman::{kalman_filter, KalmanResult};
pub use metrics::{kl_factorized, mse, total_variation, KL_FLOOR};
pub use slam::{slam_exact_forward, ExactDiscretePosterior, DEFAULT_SLAM_BUDGET};
