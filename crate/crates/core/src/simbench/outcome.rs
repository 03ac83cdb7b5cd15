use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::RegimeSampler;
use crate::model::RegimeVector;

/// How the signal variance `Var(λᵀX)` under the baseline is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomePreset {
    /// `Var(λᵀX) ~ U[0.6, 0.8]`.
    #[default]
    Uniform,
    /// Signal-to-noise ratio `ρ ~ U[1.5, 4]`, so `Var(λᵀX) = ρ / (1 + ρ)`.
    Ratio,
}

impl OutcomePreset {
    fn draw_signal_variance<R: Rng>(self, rng: &mut R) -> f64 {
        match self {
            OutcomePreset::Uniform => rng.gen_range(0.6..=0.8),
            OutcomePreset::Ratio => {
                let rho: f64 = rng.gen_range(1.5..=4.0);
                rho / (1.0 + rho)
            }
        }
    }
}

/// `Y = tanh(λᵀX) + ε`, `ε ~ N(0, v_y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeTruth {
    pub lambda: Vec<f64>,
    /// Baseline `Var(λᵀX)` the scale of `λ` was calibrated to.
    pub v_x: f64,
    pub v_y: f64,
    pub seed: u64,
}

fn sample_var(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
}

pub fn linear_score(lambda: &[f64], x: &[f64]) -> f64 {
    lambda.iter().zip(x).map(|(l, v)| l * v).sum()
}

/// Draws `λ ~ N(0, I)` and rescales it so the sample variance of `λᵀX`
/// over `baseline` equals a draw from `preset`.
pub fn make_outcome(baseline: &[Vec<f64>], preset: OutcomePreset, seed: u64) -> Result<OutcomeTruth> {
    if baseline.len() < 2 {
        return Err(Error::InsufficientData(
            "outcome calibration needs at least 2 baseline rows".into(),
        ));
    }
    let m = baseline[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lambda: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
    let v_x = preset.draw_signal_variance(&mut rng);
    let scores: Vec<f64> = baseline.iter().map(|x| linear_score(&lambda, x)).collect();
    let var = sample_var(&scores);
    if !(var > 0.0 && var.is_finite()) {
        return Err(Error::InvalidArgument(
            "λᵀX has zero variance under the baseline".into(),
        ));
    }
    // variance is homogeneous of degree 2 in λ
    let c = (v_x / var).sqrt();
    lambda.iter_mut().for_each(|l| *l *= c);
    Ok(OutcomeTruth {
        lambda,
        v_x,
        v_y: 1.0 - v_x,
        seed,
    })
}

impl OutcomeTruth {
    pub fn mean(&self, x: &[f64]) -> f64 {
        linear_score(&self.lambda, x).tanh()
    }

    /// Noisy outcomes for `xs`.
    pub fn draw_y(&self, xs: &[Vec<f64>], seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, self.v_y.max(0.0).sqrt()).expect("finite sd");
        xs.iter().map(|x| self.mean(x) + rng.sample(noise)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub mu: f64,
    /// Monte Carlo standard error of `mu`.
    pub se: f64,
    /// `Var(Y; σ) = Var(tanh(λᵀX)) + v_y`.
    pub var_y: f64,
}

/// Ground-truth functionals from precomputed truth samples.
pub fn ground_truth_from_samples(outcome: &OutcomeTruth, xs: &[Vec<f64>]) -> GroundTruth {
    let t: Vec<f64> = xs.iter().map(|x| outcome.mean(x)).collect();
    let n = t.len() as f64;
    let mu = t.iter().sum::<f64>() / n;
    let var = if t.len() > 1 { sample_var(&t) } else { 0.0 };
    GroundTruth {
        mu,
        se: (var / n).sqrt(),
        var_y: var + outcome.v_y,
    }
}

/// `E[tanh(λᵀX); σ]` over `nmc` truth samples; the noise term has mean zero
/// and is left out.
pub fn ground_truth_mu<S: RegimeSampler + ?Sized>(
    truth: &S,
    outcome: &OutcomeTruth,
    regime: &RegimeVector,
    nmc: usize,
    seed: u64,
) -> Result<GroundTruth> {
    if nmc == 0 {
        return Err(Error::InvalidArgument("nmc must be positive".into()));
    }
    Ok(ground_truth_from_samples(outcome, &truth.sample(regime, nmc, seed)?))
}
