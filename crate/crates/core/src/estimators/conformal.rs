use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::direct::estimate_direct;
use super::ipw::ipw_weights;
use super::outcome::{fit_outcome, OutcomeOptions};
use super::{RegimeDensity, RegimeSampler};
use crate::error::{Error, Result};
use crate::model::{RegimeDataset, RegimeVector};

/// Cumulative-weight slack when comparing against the quantile index.
const QUANTILE_SLACK: f64 = 1e-9;

/// `center ± half_width`. An infinite half-width (serialized as `null`)
/// means the band is the whole line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformalBand {
    pub center: f64,
    pub half_width: f64,
    pub alpha: f64,
    pub lo: f64,
    pub hi: f64,
    pub n_calibration: usize,
    pub q: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct ConformalOptions {
    pub outcome: OutcomeOptions,
    pub nsamples: usize,
    pub seed: u64,
}

/// Smallest score whose cumulative weight (ascending order) reaches
/// `q = ⌈(n + 1)(1 − α)⌉`, with weights rescaled to sum to `n`. Returns the
/// index `q` and the score, `+∞` if the weight never reaches `q`.
pub fn weighted_quantile(scores: &[f64], weights: &[f64], alpha: f64) -> (usize, f64) {
    let n = scores.len();
    let q = ((n as f64 + 1.0) * (1.0 - alpha)).ceil() as usize;
    let total: f64 = weights.iter().sum();
    if n == 0 || total <= 0.0 {
        return (q, f64::INFINITY);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut acc = 0.0;
    for i in order {
        acc += weights[i] * n as f64 / total;
        if acc >= q as f64 - QUANTILE_SLACK {
            return (q, scores[i]);
        }
    }
    (q, f64::INFINITY)
}

/// Weighted split-conformal band for the outcome under `target`.
///
/// Rows are split in half within each regime. The first half fits the
/// outcome regression; the second half supplies scores
/// `|y − μ̂(σ^k)|` weighted by density ratios to the target.
pub fn conformal_band<M: RegimeDensity + RegimeSampler + ?Sized>(
    model: &M,
    datasets: &[RegimeDataset],
    target: &RegimeVector,
    alpha: f64,
    opts: &ConformalOptions,
) -> Result<ConformalBand> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside (0, 1)")));
    }
    let total: usize = datasets.iter().map(|d| d.len()).sum();
    if total < 4 {
        return Err(Error::InsufficientData(format!(
            "conformal bands need at least 4 pooled rows, got {total}"
        )));
    }
    if datasets.iter().any(|d| d.y().is_none()) {
        return Err(Error::MissingOutcome);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut fit_part = Vec::new();
    let mut score_part = Vec::new();
    for d in datasets {
        let mut idx: Vec<usize> = (0..d.len()).collect();
        idx.shuffle(&mut rng);
        let cut = d.len() - d.len() / 2;
        fit_part.extend(d.select(&idx[..cut]));
        score_part.extend(d.select(&idx[cut..]));
    }
    if score_part.is_empty() {
        return Err(Error::InsufficientData("no rows left for calibration".into()));
    }

    let outcome = fit_outcome(&fit_part, &opts.outcome)?;
    let center = estimate_direct(model, &outcome, target, opts.nsamples, opts.seed)?.mu_hat;
    let mut scores = Vec::new();
    let mut weights = Vec::new();
    for (k, d) in score_part.iter().enumerate() {
        let mu_k = estimate_direct(
            model,
            &outcome,
            d.regime(),
            opts.nsamples,
            opts.seed.wrapping_add(k as u64 + 1),
        )?
        .mu_hat;
        let y = d.y().expect("checked above");
        scores.extend(y.iter().map(|v| (v - mu_k).abs()));
        // per-regime normalization absorbs each regime's normalizing constant
        let n_k = d.len() as f64;
        weights.extend(ipw_weights(model, d, target).into_iter().map(|w| w * n_k));
    }
    let (q, half_width) = weighted_quantile(&scores, &weights, alpha);
    Ok(ConformalBand {
        center,
        half_width,
        alpha,
        lo: center - half_width,
        hi: center + half_width,
        n_calibration: scores.len(),
        q,
    })
}
