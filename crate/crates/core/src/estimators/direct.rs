use serde::{Deserialize, Serialize};

use super::ipw::ipw_weights;
use super::outcome::{fit_outcome_weighted, OutcomeOptions};
use super::{Predictor, RegimeDensity, RegimeSampler};
use crate::error::{Error, Result};
use crate::model::{RegimeDataset, RegimeVector};

/// Number of batches for the batch-means standard error.
const SE_BATCHES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectEstimate {
    pub mu_hat: f64,
    /// Batch-means Monte Carlo standard error.
    pub se: f64,
    pub nsamples: usize,
}

/// Mean and batch-means standard error of a correlated sequence.
pub(crate) fn batch_means(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let b = SE_BATCHES.min(n);
    if b < 2 {
        return (mean, 0.0);
    }
    let size = n / b;
    let means: Vec<f64> = (0..b)
        .map(|i| values[i * size..(i + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let mm = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|v| (v - mm).powi(2)).sum::<f64>() / (b - 1) as f64;
    (mean, (var / b as f64).sqrt())
}

/// Averages `outcome` over `nsamples` draws from the target regime.
pub fn estimate_direct<S: RegimeSampler + ?Sized, P: Predictor + ?Sized>(
    sampler: &S,
    outcome: &P,
    target: &RegimeVector,
    nsamples: usize,
    seed: u64,
) -> Result<DirectEstimate> {
    if nsamples == 0 {
        return Err(Error::InvalidArgument("nsamples must be positive".into()));
    }
    let xs = sampler.sample(target, nsamples, seed)?;
    let preds: Vec<f64> = xs.iter().map(|x| outcome.predict(x)).collect();
    let (mu_hat, se) = batch_means(&preds);
    Ok(DirectEstimate { mu_hat, se, nsamples })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovshiftOptions {
    pub outcome: OutcomeOptions,
    pub nsamples: usize,
    pub seed: u64,
}

/// Refits the outcome with per-regime self-normalized importance weights
/// toward `target`, then averages it over target samples.
pub fn estimate_covshift<M: RegimeDensity + RegimeSampler + ?Sized>(
    model: &M,
    datasets: &[RegimeDataset],
    target: &RegimeVector,
    opts: &CovshiftOptions,
) -> Result<DirectEstimate> {
    let weights: Vec<Vec<f64>> = datasets.iter().map(|d| ipw_weights(model, d, target)).collect();
    let outcome = fit_outcome_weighted(datasets, &weights, &opts.outcome)?;
    estimate_direct(model, &outcome, target, opts.nsamples, opts.seed)
}
