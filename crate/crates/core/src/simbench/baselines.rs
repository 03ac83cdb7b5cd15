use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::structures::Dag;
use crate::error::{Error, Result};
use crate::estimators::RegimeSampler;
use crate::linalg::{solve_square, Matrix};
use crate::model::{InterventionSpace, RegimeDataset, RegimeVector};

/// Ridge regression of `Y` on regime indicators, one indicator per
/// non-baseline level, with an unpenalized intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeBaseline {
    space: InterventionSpace,
    pub coef: Vec<f64>,
}

fn features(space: &InterventionSpace, regime: &RegimeVector) -> Vec<f64> {
    let mut f = vec![1.0];
    for (i, &l) in regime.levels().iter().enumerate() {
        for level in 1..space.cardinality(i) {
            f.push(if l == level { 1.0 } else { 0.0 });
        }
    }
    f
}

/// Solves `(FᵀF + λ D) β = Fᵀ y` where `D` skips the intercept.
fn normal_solve(gram: &mut Matrix, rhs: &[f64], lambda: f64) -> Result<Vec<f64>> {
    for j in 1..gram.cols() {
        gram.set(j, j, gram.get(j, j) + lambda);
    }
    solve_square(gram, rhs)
        .ok_or_else(|| Error::InsufficientData("singular normal equations; increase the ridge penalty".into()))
}

fn accumulate(gram: &mut Matrix, rhs: &mut [f64], f: &[f64], y: f64, w: f64) {
    for a in 0..f.len() {
        rhs[a] += w * f[a] * y;
        for b in 0..f.len() {
            gram.set(a, b, gram.get(a, b) + w * f[a] * f[b]);
        }
    }
}

impl RidgeBaseline {
    pub fn fit(space: &InterventionSpace, datasets: &[RegimeDataset], lambda: f64) -> Result<Self> {
        if lambda.is_nan() || lambda < 0.0 {
            return Err(Error::InvalidArgument("ridge penalty must be non-negative".into()));
        }
        let p = features(space, &space.baseline()).len();
        let mut gram = Matrix::zeros(p, p);
        let mut rhs = vec![0.0; p];
        for d in datasets {
            let y = d.y().ok_or(Error::MissingOutcome)?;
            // features are constant within a regime
            let f = features(space, d.regime());
            accumulate(
                &mut gram,
                &mut rhs,
                &f,
                y.iter().sum::<f64>() / d.len().max(1) as f64,
                d.len() as f64,
            );
        }
        Ok(Self {
            space: space.clone(),
            coef: normal_solve(&mut gram, &rhs, lambda)?,
        })
    }

    pub fn predict(&self, regime: &RegimeVector) -> f64 {
        features(&self.space, regime)
            .iter()
            .zip(&self.coef)
            .map(|(f, c)| f * c)
            .sum()
    }
}

/// Penalty keeping per-node regressions solvable with few rows.
const DAG_RIDGE: f64 = 1e-8;
/// Floor on fitted residual variances.
const DAG_VAR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
struct LinearNode {
    /// Intercept first, then one weight per parent.
    coef: Vec<f64>,
    sd: f64,
}

/// Linear-Gaussian SEM fitted per node and per local intervention value.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianDag {
    dag: Dag,
    nodes: Vec<Vec<LinearNode>>,
}

impl GaussianDag {
    /// Local values never seen in training fall back to the baseline fit.
    pub fn fit(dag: &Dag, datasets: &[RegimeDataset]) -> Result<Self> {
        let mut nodes = Vec::with_capacity(dag.num_vars());
        for k in 0..dag.num_vars() {
            let pa = &dag.parents[k];
            let mut fits: Vec<Option<LinearNode>> = Vec::new();
            for v in 0..dag.local_value_count(k) {
                let rows: Vec<&Vec<f64>> = datasets
                    .iter()
                    .filter(|d| dag.local_value(k, d.regime()) == v)
                    .flat_map(|d| d.x().iter())
                    .collect();
                if rows.is_empty() {
                    fits.push(None);
                    continue;
                }
                let p = pa.len() + 1;
                let mut gram = Matrix::zeros(p, p);
                let mut rhs = vec![0.0; p];
                let mut f = vec![1.0; p];
                for r in &rows {
                    for (j, &q) in pa.iter().enumerate() {
                        f[j + 1] = r[q];
                    }
                    accumulate(&mut gram, &mut rhs, &f, r[k], 1.0);
                }
                let coef = normal_solve(&mut gram, &rhs, DAG_RIDGE)?;
                let sse: f64 = rows
                    .iter()
                    .map(|r| {
                        let pred = coef[0] + pa.iter().zip(&coef[1..]).map(|(&q, c)| c * r[q]).sum::<f64>();
                        (r[k] - pred).powi(2)
                    })
                    .sum();
                let var = (sse / rows.len() as f64).max(DAG_VAR_FLOOR);
                fits.push(Some(LinearNode { coef, sd: var.sqrt() }));
            }
            let base = fits[0].clone().ok_or_else(|| {
                Error::InsufficientData(format!("no baseline-valued rows for node `{}`", dag.names[k]))
            })?;
            nodes.push(fits.into_iter().map(|f| f.unwrap_or_else(|| base.clone())).collect());
        }
        Ok(Self {
            dag: dag.clone(),
            nodes,
        })
    }
}

impl RegimeSampler for GaussianDag {
    fn sample(&self, regime: &RegimeVector, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        self.dag.space.check(regime)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = self.dag.num_vars();
        Ok((0..n)
            .map(|_| {
                let mut x = vec![0.0; m];
                for &k in &self.dag.order {
                    let node = &self.nodes[k][self.dag.local_value(k, regime)];
                    let mean = node.coef[0]
                        + self.dag.parents[k]
                            .iter()
                            .zip(&node.coef[1..])
                            .map(|(&q, c)| c * x[q])
                            .sum::<f64>();
                    let eps: f64 = rng.sample(StandardNormal);
                    x[k] = mean + node.sd * eps;
                }
                x
            })
            .collect())
    }
}
