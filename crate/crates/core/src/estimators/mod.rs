//! Target-regime outcome estimators: direct regression over model samples,
//! inverse probability weighting, covariate-shift regression and weighted
//! split-conformal bands.
//!
//! Estimators are generic over [`RegimeDensity`] and [`RegimeSampler`] so
//! exact densities can stand in for a fitted [`EnergyModel`].

mod conformal;
mod direct;
mod ipw;
mod outcome;

pub use conformal::{conformal_band, weighted_quantile, ConformalBand, ConformalOptions};
pub use direct::{estimate_covshift, estimate_direct, CovshiftOptions, DirectEstimate};
pub use ipw::{estimate_ipw, ipw_weights, IpwEstimate, RegimeEstimate};
pub use outcome::{fit_outcome, fit_outcome_weighted, OutcomeModel, OutcomeOptions};

use crate::energy::{log_density_ratio, EnergyModel};
use crate::error::Result;
use crate::model::RegimeVector;
use crate::sampling::{gibbs_sample, GibbsOptions};

/// Unnormalized log density of each regime.
pub trait RegimeDensity {
    fn log_density_unnorm(&self, x: &[f64], regime: &RegimeVector) -> f64;

    /// `log p(x; a) − log p(x; b)` up to a constant in `x`.
    fn log_ratio(&self, x: &[f64], a: &RegimeVector, b: &RegimeVector) -> f64 {
        self.log_density_unnorm(x, a) - self.log_density_unnorm(x, b)
    }
}

/// Draws `n` rows from `p(x; regime)`.
pub trait RegimeSampler {
    fn sample(&self, regime: &RegimeVector, n: usize, seed: u64) -> Result<Vec<Vec<f64>>>;
}

/// Outcome regression `x ↦ E[Y | x]`.
pub trait Predictor {
    fn predict(&self, x: &[f64]) -> f64;
}

impl<F: Fn(&[f64]) -> f64> Predictor for F {
    fn predict(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

impl RegimeDensity for EnergyModel {
    fn log_density_unnorm(&self, x: &[f64], regime: &RegimeVector) -> f64 {
        self.log_unnorm(&self.bin_row(x), regime)
    }

    fn log_ratio(&self, x: &[f64], a: &RegimeVector, b: &RegimeVector) -> f64 {
        log_density_ratio(self, &self.bin_row(x), a, b)
    }
}

impl RegimeSampler for EnergyModel {
    fn sample(&self, regime: &RegimeVector, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        gibbs_sample(self, regime, n, &GibbsOptions::seeded(seed))
    }
}
