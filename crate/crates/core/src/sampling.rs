//! Gibbs sampling from a fitted energy model, and exact enumeration on
//! small grids.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{log_sum_exp, EnergyModel};
use crate::error::{Error, Result};
use crate::model::RegimeVector;

/// Largest grid [`exact_density`] will enumerate.
pub const EXACT_CELL_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GibbsOptions {
    pub burn: usize,
    pub thin: usize,
    pub seed: u64,
}

impl GibbsOptions {
    pub fn seeded(seed: u64) -> Self {
        Self {
            burn: 500,
            thin: 5,
            seed,
        }
    }
}

fn draw<R: Rng>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}

/// Systematic-scan Gibbs chain over grid cells. Returns bin indices.
pub fn gibbs_bins(
    model: &EnergyModel,
    regime: &RegimeVector,
    n: usize,
    opts: &GibbsOptions,
) -> Result<Vec<Vec<usize>>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let tables = model.tables(regime)?;
    let m = model.num_vars();
    let grid = model.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: Vec<usize> = (0..m).map(|v| grid.bins(v) / 2).collect();
    let mut p = Vec::new();
    let thin = opts.thin.max(1);
    let mut out = Vec::with_capacity(n);
    let mut sweep = 0usize;
    while out.len() < n {
        for v in 0..m {
            tables.conditional(v, &x, &mut p);
            x[v] = draw(&p, &mut rng);
        }
        sweep += 1;
        if sweep > opts.burn && (sweep - opts.burn) % thin == 0 {
            out.push(x.clone());
        }
    }
    Ok(out)
}

/// Gibbs samples as bin-center rows.
pub fn gibbs_sample(
    model: &EnergyModel,
    regime: &RegimeVector,
    n: usize,
    opts: &GibbsOptions,
) -> Result<Vec<Vec<f64>>> {
    let grid = model.grid();
    Ok(gibbs_bins(model, regime, n, opts)?
        .into_iter()
        .map(|b| b.iter().enumerate().map(|(v, &i)| grid.center(v, i)).collect())
        .collect())
}

/// Normalized probabilities over every grid cell (last variable fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityTable {
    pub bins: Vec<usize>,
    pub probs: Vec<f64>,
}

impl DensityTable {
    pub fn index_of(&self, x_bins: &[usize]) -> usize {
        x_bins.iter().zip(&self.bins).fold(0, |acc, (&x, &b)| acc * b + x)
    }

    pub fn cell(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.bins.len()];
        for (slot, &b) in self.bins.iter().enumerate().rev() {
            out[slot] = index % b;
            index /= b;
        }
        out
    }

    /// Marginal distribution of one variable.
    pub fn marginal(&self, var: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.bins[var]];
        for (i, &p) in self.probs.iter().enumerate() {
            out[self.cell(i)[var]] += p;
        }
        out
    }

    /// Total-variation distance to the empirical distribution of `samples`.
    pub fn tv_to_samples(&self, samples: &[Vec<usize>]) -> f64 {
        let mut counts = vec![0.0; self.probs.len()];
        for s in samples {
            counts[self.index_of(s)] += 1.0;
        }
        let n = samples.len() as f64;
        0.5 * counts
            .iter()
            .zip(&self.probs)
            .map(|(c, p)| (c / n - p).abs())
            .sum::<f64>()
    }
}

/// Exact `p(x; σ)` on the grid by enumeration.
pub fn exact_density(model: &EnergyModel, regime: &RegimeVector) -> Result<DensityTable> {
    let cells = model.grid().num_cells();
    if cells > EXACT_CELL_CAP {
        return Err(Error::GridTooLarge {
            cells,
            cap: EXACT_CELL_CAP,
        });
    }
    let tables = model.tables(regime)?;
    let bins: Vec<usize> = (0..model.num_vars()).map(|v| model.grid().bins(v)).collect();
    let mut table = DensityTable {
        bins,
        probs: Vec::with_capacity(cells as usize),
    };
    let logs: Vec<f64> = (0..cells as usize).map(|i| tables.log_unnorm(&table.cell(i))).collect();
    let z = log_sum_exp(&logs);
    table.probs = logs.iter().map(|l| (l - z).exp()).collect();
    Ok(table)
}
