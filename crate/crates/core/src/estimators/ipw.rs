use serde::{Deserialize, Serialize};

use super::RegimeDensity;
use crate::error::{Error, Result};
use crate::model::{RegimeDataset, RegimeVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeEstimate {
    pub regime: RegimeVector,
    pub n: usize,
    pub mu_hat: f64,
    pub v_hat: f64,
    /// Kish effective sample size of the weights.
    pub ess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IpwEstimate {
    pub mu_hat: f64,
    /// `sqrt(1 / Σ r_i)`; absent when every regime had zero variance.
    pub se: Option<f64>,
    pub per_regime: Vec<RegimeEstimate>,
}

/// Self-normalized weights `∝ p(x; target) / p(x; σ^i)` over one dataset.
pub fn ipw_weights<D: RegimeDensity + ?Sized>(density: &D, data: &RegimeDataset, target: &RegimeVector) -> Vec<f64> {
    let lw: Vec<f64> = data
        .x()
        .iter()
        .map(|x| density.log_ratio(x, target, data.regime()))
        .collect();
    let mx = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = lw.iter().map(|l| (l - mx).exp()).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Per-regime weighted means pooled by inverse variance.
///
/// Regimes with `v̂ = 0` are left out of the pooling; if all are, the
/// estimate falls back to the plain mean of the per-regime values.
pub fn estimate_ipw<D: RegimeDensity + ?Sized>(
    density: &D,
    datasets: &[RegimeDataset],
    target: &RegimeVector,
) -> Result<IpwEstimate> {
    if datasets.is_empty() {
        return Err(Error::InsufficientData("no datasets".into()));
    }
    let mut per_regime = Vec::with_capacity(datasets.len());
    for d in datasets {
        let y = d.y().ok_or(Error::MissingOutcome)?;
        let w = ipw_weights(density, d, target);
        let mu_hat = y.iter().zip(&w).map(|(y, w)| y * w).sum();
        let v_hat = y.iter().zip(&w).map(|(y, w)| (y * w).powi(2)).sum();
        let ess = 1.0 / w.iter().map(|w| w * w).sum::<f64>();
        per_regime.push(RegimeEstimate {
            regime: d.regime().clone(),
            n: d.len(),
            mu_hat,
            v_hat,
            ess,
        });
    }
    let pooled: Vec<&RegimeEstimate> = per_regime.iter().filter(|e| e.v_hat > 0.0).collect();
    let (mu_hat, se) = if pooled.is_empty() {
        let mean = per_regime.iter().map(|e| e.mu_hat).sum::<f64>() / per_regime.len() as f64;
        (mean, None)
    } else {
        let rsum: f64 = pooled.iter().map(|e| 1.0 / e.v_hat).sum();
        let mu = pooled.iter().map(|e| e.mu_hat / e.v_hat).sum::<f64>() / rsum;
        (mu, Some((1.0 / rsum).sqrt()))
    };
    Ok(IpwEstimate { mu_hat, se, per_regime })
}
