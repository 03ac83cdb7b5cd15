//! Discretized deep energy model of `p(x; σ)` fitted by pseudo-likelihood.

mod fit;
mod grid;
mod model;
mod persist;
mod pll;

pub use fit::{fit, FitLog, FitOptions, MONOTONE_TOL};
pub use grid::{discretize, Grid, DEFAULT_BINS};
pub use model::{density_ratio, log_density_ratio, EnergyModel, RegimeTables, DEFAULT_HIDDEN, MAX_FACTOR_CELLS};
pub use persist::{load_model, save_model, ModelFile, NetRecord, MODEL_FORMAT, MODEL_FORMAT_VERSION};
pub use pll::{pll_gradient, pseudo_loglik, PllPlan};

pub(crate) use model::log_sum_exp;
