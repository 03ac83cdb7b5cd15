use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::EnergyModel;
use super::pll::PllPlan;
use crate::error::{Error, Result};
use crate::model::RegimeDataset;
use crate::nn::Adam;

/// Allowed drop between consecutive epoch objectives before the fit is
/// flagged as non-monotone.
pub const MONOTONE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub lr: f64,
    /// Optimizer steps.
    pub steps: usize,
    /// Rows per minibatch; full batch when `None`.
    pub batch: Option<usize>,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            steps: 1000,
            batch: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitLog {
    /// Mean per-row pseudo-log-likelihood, one entry per epoch.
    pub objective: Vec<f64>,
    pub steps: usize,
    pub monotone: bool,
}

/// Maximizes the mean pseudo-log-likelihood with Adam.
pub fn fit(model: &mut EnergyModel, datasets: &[RegimeDataset], opts: &FitOptions) -> Result<FitLog> {
    if !(opts.lr > 0.0 && opts.lr.is_finite()) {
        return Err(Error::InvalidArgument("learning rate must be positive".into()));
    }
    let plan = PllPlan::new(model, datasets)?;
    let n = plan.num_rows();
    if n == 0 {
        return Err(Error::InsufficientData("no rows to fit".into()));
    }
    let batch = opts.batch.unwrap_or(n).clamp(1, n);
    let per_epoch = n.div_ceil(batch);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut params = model.params();
    let mut adam = Adam::new(params.len(), opts.lr);
    let mut grad = vec![0.0; params.len()];
    let mut objective = Vec::new();
    let mut epoch_sum = 0.0;
    let mut epoch_steps = 0;

    for step in 0..opts.steps {
        let slot = step % per_epoch;
        if slot == 0 && batch < n {
            order.shuffle(&mut rng);
        }
        let rows = &order[slot * batch..((slot + 1) * batch).min(n)];
        grad.iter_mut().for_each(|g| *g = 0.0);
        let subset = (batch < n).then_some(rows);
        let value = plan.evaluate(model, subset, Some(&mut grad)) / rows.len() as f64;
        if !value.is_finite() {
            return Err(Error::NonFinite {
                what: "objective",
                step,
            });
        }
        let scale = 1.0 / rows.len() as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite { what: "gradient", step });
        }
        adam.step(&mut params, &grad, true);
        model.set_params(&params);
        epoch_sum += value;
        epoch_steps += 1;
        if slot + 1 == per_epoch || step + 1 == opts.steps {
            objective.push(epoch_sum / epoch_steps as f64);
            epoch_sum = 0.0;
            epoch_steps = 0;
        }
    }
    let monotone = objective.windows(2).all(|w| w[1] >= w[0] - MONOTONE_TOL);
    Ok(FitLog {
        objective,
        steps: opts.steps,
        monotone,
    })
}
