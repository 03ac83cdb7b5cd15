use super::model::{log_sum_exp, softmax_in_place, EnergyModel};
use crate::error::{Error, Result};
use crate::model::RegimeDataset;

/// Pseudo-likelihood workspace for a fixed model layout and dataset.
///
/// Records, per network, the potential-table cells any conditional touches,
/// so each evaluation runs every network once per needed cell.
#[derive(Debug, Clone)]
pub struct PllPlan {
    rows: Vec<Vec<usize>>,
    row_nets: Vec<Vec<usize>>,
    row_cells: Vec<Vec<usize>>,
    used: Vec<Vec<usize>>,
    inputs: Vec<Vec<Vec<f64>>>,
}

impl PllPlan {
    pub fn new(model: &EnergyModel, datasets: &[RegimeDataset]) -> Result<Self> {
        let ifm = model.ifm();
        let m = model.num_vars();
        let mut rows = Vec::new();
        let mut row_nets = Vec::new();
        let mut row_cells: Vec<Vec<usize>> = Vec::new();
        for d in datasets {
            ifm.space().check(d.regime())?;
            if d.num_vars() != m {
                return Err(Error::LengthMismatch(format!(
                    "dataset for ({}) has {} columns, model has {m} variables",
                    d.regime(),
                    d.num_vars()
                )));
            }
            let nets: Vec<usize> = (0..ifm.num_factors()).map(|k| model.net_for(k, d.regime())).collect();
            for x in d.x() {
                let bins = model.bin_row(x);
                row_cells.push((0..ifm.num_factors()).map(|k| model.cell_of(k, &bins)).collect());
                row_nets.push(nets.clone());
                rows.push(bins);
            }
        }

        let mut mark: Vec<Vec<bool>> = vec![Vec::new(); model.num_nets()];
        for (i, row) in rows.iter().enumerate() {
            for (r, &xr) in row.iter().enumerate().take(m) {
                let nb = model.grid().bins(r);
                for &(k, stride) in model.touching(r) {
                    let net = row_nets[i][k];
                    if mark[net].is_empty() {
                        mark[net] = vec![false; model.table_len(k)];
                    }
                    let base = row_cells[i][k] - xr * stride;
                    for b in 0..nb {
                        mark[net][base + b * stride] = true;
                    }
                }
            }
        }
        let used: Vec<Vec<usize>> = mark
            .iter()
            .map(|mk| (0..mk.len()).filter(|&c| mk[c]).collect())
            .collect();
        let inputs = used
            .iter()
            .enumerate()
            .map(|(net, cells)| {
                let (k, _) = model.net_owner(net);
                cells.iter().map(|&c| model.cell_input(k, c)).collect()
            })
            .collect();
        Ok(Self {
            rows,
            row_nets,
            row_cells,
            used,
            inputs,
        })
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Sum of conditional log-likelihoods over `subset` (all rows if `None`).
    /// When `grad` is given, the exact gradient is added into it.
    pub fn evaluate(&self, model: &EnergyModel, subset: Option<&[usize]>, grad: Option<&mut [f64]>) -> f64 {
        let nets = model.nets();
        let tables: Vec<Vec<f64>> = (0..nets.len())
            .map(|n| {
                if self.used[n].is_empty() {
                    return Vec::new();
                }
                let (k, _) = model.net_owner(n);
                let mut t = vec![0.0; model.table_len(k)];
                for (&c, x) in self.used[n].iter().zip(&self.inputs[n]) {
                    t[c] = nets[n].forward(x);
                }
                t
            })
            .collect();
        let mut dt: Vec<Vec<f64>> = if grad.is_some() {
            tables.iter().map(|t| vec![0.0; t.len()]).collect()
        } else {
            Vec::new()
        };

        let all: Vec<usize>;
        let rows = match subset {
            Some(s) => s,
            None => {
                all = (0..self.rows.len()).collect();
                &all
            }
        };
        let mut total = 0.0;
        let mut logits = Vec::new();
        for &i in rows {
            let x = &self.rows[i];
            for (r, &xr) in x.iter().enumerate() {
                let nb = model.grid().bins(r);
                logits.clear();
                logits.resize(nb, 0.0);
                for &(k, stride) in model.touching(r) {
                    let t = &tables[self.row_nets[i][k]];
                    let base = self.row_cells[i][k] - xr * stride;
                    for (b, l) in logits.iter_mut().enumerate() {
                        *l += t[base + b * stride];
                    }
                }
                total += logits[xr] - log_sum_exp(&logits);
                if grad.is_some() {
                    softmax_in_place(&mut logits);
                    for &(k, stride) in model.touching(r) {
                        let d = &mut dt[self.row_nets[i][k]];
                        let base = self.row_cells[i][k] - xr * stride;
                        d[base + xr * stride] += 1.0;
                        for (b, p) in logits.iter().enumerate() {
                            d[base + b * stride] -= p;
                        }
                    }
                }
            }
        }

        if let Some(g) = grad {
            let offsets = model.param_offsets();
            for n in 0..nets.len() {
                let slice = &mut g[offsets[n]..offsets[n + 1]];
                for (&c, x) in self.used[n].iter().zip(&self.inputs[n]) {
                    let s = dt[n][c];
                    if s != 0.0 {
                        nets[n].accumulate_grad(x, s, slice);
                    }
                }
            }
        }
        total
    }
}

/// `Σ_regimes Σ_rows Σ_r log p(x_r | x_{−r}; σ)` on the model's grid.
pub fn pseudo_loglik(model: &EnergyModel, datasets: &[RegimeDataset]) -> Result<f64> {
    Ok(PllPlan::new(model, datasets)?.evaluate(model, None, None))
}

/// Exact gradient of [`pseudo_loglik`] with respect to the flat parameters.
pub fn pll_gradient(model: &EnergyModel, datasets: &[RegimeDataset]) -> Result<Vec<f64>> {
    let mut g = vec![0.0; model.num_params()];
    PllPlan::new(model, datasets)?.evaluate(model, None, Some(&mut g));
    Ok(g)
}
