//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use ifactor::estimators::{RegimeDensity, RegimeSampler};
use ifactor::model::{FactorSpec, IfmStructure, InterventionSpace, RegimeSet, RegimeVector};
use ifactor::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// An IFM with explicit positive factor tables on a small discrete grid.
/// Points are bin indices stored as `f64`.
pub struct TableIfm {
    pub ifm: IfmStructure,
    pub bins: usize,
    /// `tables[k][value][cell]` over the factor's variables, last fastest.
    pub tables: Vec<Vec<Vec<f64>>>,
}

impl TableIfm {
    pub fn random(ifm: IfmStructure, bins: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tables = (0..ifm.num_factors())
            .map(|k| {
                let cells = bins.pow(ifm.factor(k).vars().len() as u32);
                (0..ifm.factor_value_count(k))
                    .map(|_| (0..cells).map(|_| rng.gen_range(0.2..5.0)).collect())
                    .collect()
            })
            .collect();
        Self { ifm, bins, tables }
    }

    pub fn num_cells(&self) -> usize {
        self.bins.pow(self.ifm.num_vars() as u32)
    }

    pub fn cell(&self, mut index: usize) -> Vec<usize> {
        let m = self.ifm.num_vars();
        let mut out = vec![0; m];
        for slot in (0..m).rev() {
            out[slot] = index % self.bins;
            index /= self.bins;
        }
        out
    }

    pub fn unnorm(&self, x: &[usize], regime: &RegimeVector) -> f64 {
        (0..self.ifm.num_factors())
            .map(|k| {
                let v = self.ifm.factor_value_index(k, regime);
                let cell = self
                    .ifm
                    .factor(k)
                    .vars()
                    .iter()
                    .fold(0, |acc, &var| acc * self.bins + x[var]);
                self.tables[k][v][cell]
            })
            .product()
    }

    /// Normalized `p(x; σ)` over every cell.
    pub fn density(&self, regime: &RegimeVector) -> Vec<f64> {
        let u: Vec<f64> = (0..self.num_cells())
            .map(|i| self.unnorm(&self.cell(i), regime))
            .collect();
        let z: f64 = u.iter().sum();
        u.into_iter().map(|v| v / z).collect()
    }

    /// Exact expectation of `g` under `σ`.
    pub fn expect(&self, regime: &RegimeVector, g: impl Fn(&[f64]) -> f64) -> f64 {
        self.density(regime)
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let x: Vec<f64> = self.cell(i).iter().map(|&b| b as f64).collect();
                p * g(&x)
            })
            .sum()
    }
}

impl RegimeDensity for TableIfm {
    fn log_density_unnorm(&self, x: &[f64], regime: &RegimeVector) -> f64 {
        let bins: Vec<usize> = x.iter().map(|v| v.round() as usize).collect();
        self.unnorm(&bins, regime).ln()
    }
}

impl RegimeSampler for TableIfm {
    /// Independent draws by inversion over the enumerated cells.
    fn sample(&self, regime: &RegimeVector, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let p = self.density(regime);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..n)
            .map(|_| {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut idx = p.len() - 1;
                for (i, &pi) in p.iter().enumerate() {
                    acc += pi;
                    if u < acc {
                        idx = i;
                        break;
                    }
                }
                self.cell(idx).iter().map(|&b| b as f64).collect()
            })
            .collect())
    }
}

/// `∏_i p_i^{q_i}` normalized over the grid.
pub fn reconstruct(oracle: &TableIfm, train: &RegimeSet, q: &[f64]) -> Vec<f64> {
    let dens: Vec<Vec<f64>> = train.iter().map(|r| oracle.density(r)).collect();
    let logs: Vec<f64> = (0..oracle.num_cells())
        .map(|c| dens.iter().zip(q).map(|(d, qi)| qi * d[c].ln()).sum())
        .collect();
    let mx = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let u: Vec<f64> = logs.iter().map(|l| (l - mx).exp()).collect();
    let z: f64 = u.iter().sum();
    u.into_iter().map(|v| v / z).collect()
}

pub fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Random structure with `m` variables, `d` binary interventions and up to
/// three factors, plus a random train set and target.
pub fn random_instance(seed: u64) -> (IfmStructure, RegimeSet, RegimeVector) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(1..=4);
    let d = rng.gen_range(1..=3);
    let space = InterventionSpace::binary(d).unwrap();
    loop {
        let nf = rng.gen_range(1..=3);
        let factors: Vec<FactorSpec> = (0..nf)
            .map(|_| {
                let vars: Vec<usize> = (0..m).filter(|_| rng.gen_bool(0.5)).collect();
                let vars = if vars.is_empty() {
                    vec![rng.gen_range(0..m)]
                } else {
                    vars
                };
                let intvs: Vec<usize> = (0..d).filter(|_| rng.gen_bool(0.5)).collect();
                FactorSpec::new(vars, intvs).unwrap()
            })
            .collect();
        let names = (1..=m).map(|i| format!("x{i}")).collect();
        let Ok(ifm) = IfmStructure::new(names, space.clone(), factors) else {
            continue;
        };
        let all: Vec<RegimeVector> = space.all_regimes().iter().cloned().collect();
        let target = all[rng.gen_range(0..all.len())].clone();
        let mut train = RegimeSet::new();
        for r in &all {
            if r != &target && rng.gen_bool(0.85) {
                train.insert(r.clone());
            }
        }
        if train.is_empty() {
            train.insert(all[(all.iter().position(|r| r == &target).unwrap() + 1) % all.len()].clone());
        }
        return (ifm, train, target);
    }
}
