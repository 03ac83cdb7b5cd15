use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::grid::Grid;
use crate::error::{Error, Result};
use crate::model::{IfmStructure, RegimeVector};
use crate::nn::Mlp;

pub const DEFAULT_HIDDEN: usize = 15;

/// Largest dense potential table allowed for a single factor.
pub const MAX_FACTOR_CELLS: u128 = 1 << 22;

/// Discretized energy model `log p(x; σ) = Σ_k φ_{k,σ_{F_k}}(x_{S_k}) + const`
/// with one network per factor and value of `σ_{F_k}`.
///
/// Networks read the bin centers of `x_{S_k}`, rescaled affinely so each
/// variable's grid range maps to `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyModel {
    ifm: IfmStructure,
    grid: Grid,
    hidden: usize,
    seed: u64,
    nets: Vec<Mlp>,
    net_base: Vec<usize>,
    strides: Vec<Vec<usize>>,
    table_len: Vec<usize>,
    touching: Vec<Vec<(usize, usize)>>,
    inputs: Vec<Vec<f64>>,
}

impl EnergyModel {
    /// Fresh model: hidden layers random, output layers zero, so the
    /// initial density is uniform on the grid.
    pub fn new(ifm: IfmStructure, grid: Grid, hidden: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::build(ifm, grid, hidden, seed, |n| Mlp::init(n, hidden, &mut rng))
    }

    /// Model with random output layers too, for simulation.
    pub fn random(ifm: IfmStructure, grid: Grid, hidden: usize, scale: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::build(ifm, grid, hidden, seed, |n| Mlp::random(n, hidden, scale, &mut rng))
    }

    fn build(
        ifm: IfmStructure,
        grid: Grid,
        hidden: usize,
        seed: u64,
        mut make: impl FnMut(usize) -> Mlp,
    ) -> Result<Self> {
        if grid.num_vars() != ifm.num_vars() {
            return Err(Error::LengthMismatch(format!(
                "grid has {} variables, structure has {}",
                grid.num_vars(),
                ifm.num_vars()
            )));
        }
        if hidden == 0 {
            return Err(Error::InvalidArgument("hidden width must be positive".into()));
        }
        let mut nets = Vec::new();
        let mut net_base = Vec::new();
        let mut strides = Vec::new();
        let mut table_len = Vec::new();
        let mut touching = vec![Vec::new(); ifm.num_vars()];
        for (k, f) in ifm.factors().iter().enumerate() {
            let cells: u128 = f.vars().iter().map(|&v| grid.bins(v) as u128).product();
            if cells > MAX_FACTOR_CELLS {
                return Err(Error::GridTooLarge {
                    cells,
                    cap: MAX_FACTOR_CELLS,
                });
            }
            let mut s = vec![0; f.vars().len()];
            let mut acc = 1;
            for (slot, &v) in f.vars().iter().enumerate().rev() {
                s[slot] = acc;
                acc *= grid.bins(v);
            }
            for (slot, &v) in f.vars().iter().enumerate() {
                touching[v].push((k, s[slot]));
            }
            strides.push(s);
            table_len.push(cells as usize);
            net_base.push(nets.len());
            for _ in 0..ifm.factor_value_count(k) {
                nets.push(make(f.vars().len()));
            }
        }
        let inputs = (0..grid.num_vars())
            .map(|v| {
                let (lo, hi) = grid.range(v);
                grid.centers(v)
                    .iter()
                    .map(|c| 2.0 * (c - lo) / (hi - lo) - 1.0)
                    .collect()
            })
            .collect();
        Ok(Self {
            ifm,
            grid,
            hidden,
            seed,
            nets,
            net_base,
            strides,
            table_len,
            touching,
            inputs,
        })
    }

    pub fn ifm(&self) -> &IfmStructure {
        &self.ifm
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn num_vars(&self) -> usize {
        self.ifm.num_vars()
    }

    pub fn num_nets(&self) -> usize {
        self.nets.len()
    }

    pub fn nets(&self) -> &[Mlp] {
        &self.nets
    }

    pub fn net_index(&self, k: usize, value: usize) -> usize {
        self.net_base[k] + value
    }

    /// Net of factor `k` selected by `regime`.
    pub fn net_for(&self, k: usize, regime: &RegimeVector) -> usize {
        self.net_index(k, self.ifm.factor_value_index(k, regime))
    }

    pub fn net(&self, idx: usize) -> &Mlp {
        &self.nets[idx]
    }

    pub fn net_mut(&mut self, idx: usize) -> &mut Mlp {
        &mut self.nets[idx]
    }

    /// Factor and `σ_{F_k}` value index of a net.
    pub fn net_owner(&self, idx: usize) -> (usize, usize) {
        let k = self.net_base.partition_point(|&b| b <= idx) - 1;
        (k, idx - self.net_base[k])
    }

    pub fn table_len(&self, k: usize) -> usize {
        self.table_len[k]
    }

    pub fn strides(&self, k: usize) -> &[usize] {
        &self.strides[k]
    }

    /// `(factor, stride)` for every factor whose scope contains `var`.
    pub fn touching(&self, var: usize) -> &[(usize, usize)] {
        &self.touching[var]
    }

    pub fn num_params(&self) -> usize {
        self.nets.iter().map(|n| n.params().len()).sum()
    }

    pub fn param_offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nets.len() + 1);
        let mut acc = 0;
        out.push(0);
        for n in &self.nets {
            acc += n.params().len();
            out.push(acc);
        }
        out
    }

    pub fn params(&self) -> Vec<f64> {
        self.nets.iter().flat_map(|n| n.params().iter().copied()).collect()
    }

    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.num_params());
        let mut at = 0;
        for n in &mut self.nets {
            let len = n.params().len();
            n.params_mut().copy_from_slice(&params[at..at + len]);
            at += len;
        }
    }

    /// Dense cell index of `x_{S_k}` (last variable fastest).
    pub fn cell_of(&self, k: usize, x_bins: &[usize]) -> usize {
        self.ifm
            .factor(k)
            .vars()
            .iter()
            .zip(&self.strides[k])
            .map(|(&v, &s)| x_bins[v] * s)
            .sum()
    }

    /// Network input for a dense cell of factor `k`.
    pub fn cell_input(&self, k: usize, mut cell: usize) -> Vec<f64> {
        let vars = self.ifm.factor(k).vars();
        let mut out = vec![0.0; vars.len()];
        for (slot, &v) in vars.iter().enumerate() {
            let s = self.strides[k][slot];
            out[slot] = self.inputs[v][cell / s];
            cell %= s;
        }
        out
    }

    /// `φ_{k,value}` at the cell containing `x_bins`.
    pub fn potential(&self, k: usize, value: usize, x_bins: &[usize]) -> f64 {
        let x: Vec<f64> = self
            .ifm
            .factor(k)
            .vars()
            .iter()
            .map(|&v| self.inputs[v][x_bins[v]])
            .collect();
        self.nets[self.net_index(k, value)].forward(&x)
    }

    /// Unnormalized log density at the cell `x_bins` under `regime`.
    pub fn log_unnorm(&self, x_bins: &[usize], regime: &RegimeVector) -> f64 {
        (0..self.ifm.num_factors())
            .map(|k| self.potential(k, self.ifm.factor_value_index(k, regime), x_bins))
            .sum()
    }

    pub fn bin_row(&self, row: &[f64]) -> Vec<usize> {
        self.grid.bin_row(row)
    }

    /// Dense potential tables for every factor under `regime`.
    pub fn tables(&self, regime: &RegimeVector) -> Result<RegimeTables> {
        self.ifm.space().check(regime)?;
        let tables = (0..self.ifm.num_factors())
            .map(|k| {
                let net = &self.nets[self.net_for(k, regime)];
                (0..self.table_len[k])
                    .map(|c| net.forward(&self.cell_input(k, c)))
                    .collect()
            })
            .collect();
        Ok(RegimeTables {
            tables,
            vars: self.ifm.factors().iter().map(|f| f.vars().to_vec()).collect(),
            strides: self.strides.clone(),
            touching: self.touching.clone(),
            bins: (0..self.num_vars()).map(|v| self.grid.bins(v)).collect(),
        })
    }
}

/// Potentials of one regime tabulated over each factor's cells.
#[derive(Debug, Clone)]
pub struct RegimeTables {
    tables: Vec<Vec<f64>>,
    vars: Vec<Vec<usize>>,
    strides: Vec<Vec<usize>>,
    touching: Vec<Vec<(usize, usize)>>,
    bins: Vec<usize>,
}

impl RegimeTables {
    fn cell(&self, k: usize, x_bins: &[usize]) -> usize {
        self.vars[k]
            .iter()
            .zip(&self.strides[k])
            .map(|(&v, &s)| x_bins[v] * s)
            .sum()
    }

    pub fn log_unnorm(&self, x_bins: &[usize]) -> f64 {
        (0..self.tables.len())
            .map(|k| self.tables[k][self.cell(k, x_bins)])
            .sum()
    }

    /// Normalized conditional of `var` given the other coordinates of
    /// `x_bins`, written into `out` (resized to the bin count).
    pub fn conditional(&self, var: usize, x_bins: &[usize], out: &mut Vec<f64>) {
        let nb = self.bins[var];
        out.clear();
        out.resize(nb, 0.0);
        for &(k, stride) in &self.touching[var] {
            let base = self.cell(k, x_bins) - x_bins[var] * stride;
            let t = &self.tables[k];
            for (b, o) in out.iter_mut().enumerate() {
                *o += t[base + b * stride];
            }
        }
        softmax_in_place(out);
    }
}

pub(crate) fn log_sum_exp(v: &[f64]) -> f64 {
    let mx = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if mx == f64::NEG_INFINITY {
        return mx;
    }
    mx + v.iter().map(|x| (x - mx).exp()).sum::<f64>().ln()
}

pub(crate) fn softmax_in_place(v: &mut [f64]) {
    let mx = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for x in v.iter_mut() {
        *x = (*x - mx).exp();
        s += *x;
    }
    for x in v.iter_mut() {
        *x /= s;
    }
}

/// `exp(log_unnorm(x; σ_a) − log_unnorm(x; σ_b))`, unnormalized.
pub fn density_ratio(model: &EnergyModel, x_bins: &[usize], a: &RegimeVector, b: &RegimeVector) -> f64 {
    log_density_ratio(model, x_bins, a, b).exp()
}

/// Log of [`density_ratio`]; only factors whose net differs are evaluated.
pub fn log_density_ratio(model: &EnergyModel, x_bins: &[usize], a: &RegimeVector, b: &RegimeVector) -> f64 {
    let ifm = model.ifm();
    (0..ifm.num_factors())
        .filter_map(|k| {
            let (va, vb) = (ifm.factor_value_index(k, a), ifm.factor_value_index(k, b));
            (va != vb).then(|| model.potential(k, va, x_bins) - model.potential(k, vb, x_bins))
        })
        .sum()
}
