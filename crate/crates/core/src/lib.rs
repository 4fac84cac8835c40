//! Derivative-aware change detection.
//!
//! A Gaussian process is fitted to a handful of expensive samples, the exact
//! posterior of its derivative process drives a PI/EI/UCB acquisition rule
//! that picks the next sample, and abrupt shifts are finally localized with a
//! filtered-derivative estimator on the posterior mean.
//!
//! Module map:
//!
//! * [`kernel`]: RBF kernel, its derivatives, marginal likelihood and
//!   hyperparameter fitting.
//! * [`gp`]: exact posterior of values and first derivatives.
//! * [`acquisition`]: acquisition scores on the derivative posterior.
//! * [`active_loop`]: the sequential sampling loop.
//! * [`detect`]: filtered derivative, single / multiple change-point
//!   extraction, and local-plane slope ranking in 2-D.
//! * [`simulate`]: jump-diffusion scenarios, the 2-D test surface and
//!   well-log ingestion.
//! * [`eval`]: margin-based F1 and the benchmark harness.

pub mod acquisition;
pub mod active_loop;
pub mod detect;
mod error;
pub mod eval;
pub mod format;
pub mod gp;
pub mod kernel;
pub mod optim;
pub mod simulate;

pub use error::{DacdError, Result};

/// A point of the input space, one coordinate per dimension.
pub type Point = Vec<f64>;
