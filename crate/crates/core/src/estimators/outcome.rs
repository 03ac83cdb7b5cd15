use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Predictor;
use crate::error::{Error, Result};
use crate::model::RegimeDataset;
use crate::nn::{Adam, Mlp};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeOptions {
    pub hidden: usize,
    pub lr: f64,
    pub steps: usize,
    /// Rows per minibatch; full batch when `None`.
    pub batch: Option<usize>,
    pub seed: u64,
}

impl Default for OutcomeOptions {
    fn default() -> Self {
        Self {
            hidden: 15,
            lr: 5e-3,
            steps: 2000,
            batch: Some(256),
            seed: 0,
        }
    }
}

/// Regression network `x ↦ E[Y | x]` over standardized inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeModel {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub net: Mlp,
}

impl OutcomeModel {
    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

impl Predictor for OutcomeModel {
    fn predict(&self, x: &[f64]) -> f64 {
        self.net.forward(&self.standardize(x))
    }
}

/// Unweighted squared-error fit pooled across regimes.
pub fn fit_outcome(datasets: &[RegimeDataset], opts: &OutcomeOptions) -> Result<OutcomeModel> {
    let weights: Vec<Vec<f64>> = datasets.iter().map(|d| vec![1.0; d.len()]).collect();
    fit_outcome_weighted(datasets, &weights, opts)
}

/// Minimizes `Σ w (y − f(x))² / Σ w` with Adam.
pub fn fit_outcome_weighted(
    datasets: &[RegimeDataset],
    weights: &[Vec<f64>],
    opts: &OutcomeOptions,
) -> Result<OutcomeModel> {
    if datasets.is_empty() {
        return Err(Error::InsufficientData("no datasets".into()));
    }
    if weights.len() != datasets.len() {
        return Err(Error::LengthMismatch("one weight vector per dataset".into()));
    }
    let mut xs: Vec<&[f64]> = Vec::new();
    let mut ys = Vec::new();
    let mut ws = Vec::new();
    for (d, w) in datasets.iter().zip(weights) {
        let y = d.y().ok_or(Error::MissingOutcome)?;
        if w.len() != d.len() {
            return Err(Error::LengthMismatch(format!(
                "{} weights for {} rows",
                w.len(),
                d.len()
            )));
        }
        for ((x, &yv), &wv) in d.x().iter().zip(y).zip(w) {
            if !(wv >= 0.0 && wv.is_finite()) {
                return Err(Error::InvalidArgument("weights must be finite and non-negative".into()));
            }
            xs.push(x);
            ys.push(yv);
            ws.push(wv);
        }
    }
    let n = xs.len();
    let m = xs[0].len();
    let mut mean = vec![0.0; m];
    for x in &xs {
        for (a, v) in mean.iter_mut().zip(x.iter()) {
            *a += v / n as f64;
        }
    }
    let mut scale = vec![0.0; m];
    for x in &xs {
        for ((s, v), mu) in scale.iter_mut().zip(x.iter()).zip(&mean) {
            *s += (v - mu).powi(2) / n as f64;
        }
    }
    for s in &mut scale {
        *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut model = OutcomeModel {
        mean,
        scale,
        net: Mlp::init(m, opts.hidden, &mut rng),
    };
    let inputs: Vec<Vec<f64>> = xs.iter().map(|x| model.standardize(x)).collect();
    let batch = opts.batch.unwrap_or(n).clamp(1, n);
    let per_epoch = n.div_ceil(batch);
    let mut order: Vec<usize> = (0..n).collect();
    let mut params = model.net.params().to_vec();
    let mut adam = Adam::new(params.len(), opts.lr);
    let mut grad = vec![0.0; params.len()];
    for step in 0..opts.steps {
        let slot = step % per_epoch;
        if slot == 0 && batch < n {
            order.shuffle(&mut rng);
        }
        let rows = &order[slot * batch..((slot + 1) * batch).min(n)];
        let wsum: f64 = rows.iter().map(|&j| ws[j]).sum();
        if wsum <= 0.0 {
            continue;
        }
        grad.iter_mut().for_each(|g| *g = 0.0);
        for &j in rows {
            if ws[j] == 0.0 {
                continue;
            }
            let r = ys[j] - model.net.forward(&inputs[j]);
            model
                .net
                .accumulate_grad(&inputs[j], -2.0 * ws[j] * r / wsum, &mut grad);
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite {
                what: "outcome gradient",
                step,
            });
        }
        adam.step(&mut params, &grad, false);
        model.net.params_mut().copy_from_slice(&params);
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RegimeVector;

    fn data(f: impl Fn(f64, f64) -> f64) -> RegimeDataset {
        let x: Vec<Vec<f64>> = (0..200)
            .map(|i| vec![(i % 20) as f64 / 10.0 - 1.0, (i / 20) as f64 / 5.0 - 1.0])
            .collect();
        let y = x.iter().map(|r| f(r[0], r[1])).collect();
        RegimeDataset::new(RegimeVector(vec![0]), x, Some(y)).unwrap()
    }

    #[test]
    fn constant_target() {
        let d = data(|_, _| 0.7);
        let opts = OutcomeOptions {
            lr: 1e-2,
            batch: None,
            ..Default::default()
        };
        let m = fit_outcome(&[d], &opts).unwrap();
        assert!((m.predict(&[0.3, 0.1]) - 0.7).abs() < 1e-3);
    }

    #[test]
    fn linear_target_in_sample() {
        let d = data(|a, b| 0.5 * a - 0.8 * b + 0.1);
        let opts = OutcomeOptions {
            lr: 1e-2,
            steps: 3000,
            batch: None,
            ..Default::default()
        };
        let m = fit_outcome(std::slice::from_ref(&d), &opts).unwrap();
        let y = d.y().unwrap();
        let mse: f64 = d
            .x()
            .iter()
            .zip(y)
            .map(|(x, y)| (m.predict(x) - y).powi(2))
            .sum::<f64>()
            / y.len() as f64;
        assert!(mse.sqrt() < 0.05, "rmse {}", mse.sqrt());
    }

    #[test]
    fn zero_steps_predict_zero() {
        let m = fit_outcome(
            &[data(|a, _| a)],
            &OutcomeOptions {
                steps: 0,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(m.predict(&[0.2, 0.2]), 0.0);
    }

    #[test]
    fn missing_outcome() {
        let d = RegimeDataset::new(RegimeVector(vec![0]), vec![vec![1.0]], None).unwrap();
        assert!(matches!(
            fit_outcome(&[d], &OutcomeOptions::default()),
            Err(Error::MissingOutcome)
        ));
    }
}
