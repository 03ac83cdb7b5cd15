//! Identification and estimation of unseen intervention regimes under
//! interventional factor models.
//!
//! The crate decides whether the distribution of a system under a new
//! combination of interventions follows from data gathered under other
//! combinations, given a factorization `p(x; σ) ∝ ∏_k f_k(x_{S_k}; σ_{F_k})`,
//! and estimates target-regime outcomes with a discretized energy model.

pub mod cli;
pub mod energy;
pub mod error;
pub mod estimators;
pub mod identify;
pub mod linalg;
pub mod model;
pub mod nn;
pub mod sampling;
pub mod simbench;

pub use error::{Error, Result};
