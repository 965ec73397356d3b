//! Joint online state and parameter estimation for dynamic probabilistic models.
//!
//! Each particle of a sequential Monte Carlo filter carries, next to its
//! state history, a compact assumed-density approximation of the posterior
//! over the static model parameters. Every step the parameter is drawn from
//! that approximation, the state is propagated with the bootstrap proposal,
//! the particle is weighted by the observation likelihood, and the
//! approximation is refreshed by moment matching against the newly observed
//! transition and observation factors.
//!
//! The crate is organised as follows:
//!
//! - [`model`]: the state-space model interface, parameter/state vectors,
//!   per-step parameter likelihoods, seeded random streams and simulation.
//! - [`adf`]: Gaussian, mixture-of-Gaussians and factorized discrete
//!   projections with Monte Carlo, Gauss-Hermite and unscented moment rules.
//! - [`filter`]: the assumed-parameter filter, bootstrap particle filter,
//!   Liu-West filter and particle-marginal Metropolis-Hastings, all on top of
//!   a pre-allocated, index-indirect particle store.
//! - [`models`]: bundled benchmark models (SIN, bimodal SIN, grid SLAM,
//!   linear-Gaussian).
//! - [`oracle`]: exact and brute-force references (SLAM forward recursion,
//!   Kalman filter, grid posteriors) and evaluation metrics.
//! - [`harness`]: experiment configuration, batch execution and CSV/JSON
//!   output used by the `apictl` binary.

pub mod adf;
pub mod error;
pub mod filter;
pub mod harness;
pub mod model;
pub mod models;
pub mod oracle;

pub use error::{Error, Result};
