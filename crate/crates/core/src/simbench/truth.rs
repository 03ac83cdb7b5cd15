use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::structures::Dag;
use crate::energy::{EnergyModel, Grid, DEFAULT_BINS};
use crate::error::{Error, Result};
use crate::estimators::RegimeSampler;
use crate::model::{IfmStructure, RegimeVector};
use crate::nn::Mlp;
use crate::sampling::{gibbs_bins, GibbsOptions};

/// Hidden width of the simulator networks.
pub const TRUTH_HIDDEN: usize = 10;
/// Lower bound on the DAG-truth noise scale.
pub const SCALE_FLOOR: f64 = 1e-3;
/// Support of the IFM truth grid on every variable.
pub const IFM_TRUTH_RANGE: (f64, f64) = (-3.0, 3.0);

fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z
    } else {
        z.exp().ln_1p()
    }
}

/// Heteroscedastic Gaussian SEM: `x_k = f_k(pa_k) + g_k(pa_k) · ε_k`, with a
/// separate `(f_k, g_k)` pair for each value of the interventions acting on
/// node `k`.
#[derive(Debug, Clone)]
pub struct DagTruth {
    pub dag: Dag,
    mean_nets: Vec<Vec<Mlp>>,
    scale_nets: Vec<Vec<Mlp>>,
    pub seed: u64,
}

pub fn make_dag_truth(dag: &Dag, seed: u64) -> DagTruth {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mean_nets = Vec::with_capacity(dag.num_vars());
    let mut scale_nets = Vec::with_capacity(dag.num_vars());
    for k in 0..dag.num_vars() {
        let p = dag.parents[k].len();
        let vals = dag.local_value_count(k);
        mean_nets.push((0..vals).map(|_| Mlp::random(p, TRUTH_HIDDEN, 1.0, &mut rng)).collect());
        scale_nets.push((0..vals).map(|_| Mlp::random(p, TRUTH_HIDDEN, 0.5, &mut rng)).collect());
    }
    DagTruth {
        dag: dag.clone(),
        mean_nets,
        scale_nets,
        seed,
    }
}

impl DagTruth {
    /// Conditional mean and scale of node `k` given its parents' values.
    pub fn conditional(&self, k: usize, parents: &[f64], regime: &RegimeVector) -> (f64, f64) {
        let v = self.dag.local_value(k, regime);
        let mean = self.mean_nets[k][v].forward(parents);
        let scale = softplus(self.scale_nets[k][v].forward(parents)) + SCALE_FLOOR;
        (mean, scale)
    }

    fn sample_row<R: Rng>(&self, regime: &RegimeVector, rng: &mut R) -> Vec<f64> {
        let mut x = vec![0.0; self.dag.num_vars()];
        let mut pa = Vec::new();
        for &k in &self.dag.order {
            pa.clear();
            pa.extend(self.dag.parents[k].iter().map(|&p| x[p]));
            let (mean, scale) = self.conditional(k, &pa, regime);
            let eps: f64 = rng.sample(StandardNormal);
            x[k] = mean + scale * eps;
        }
        x
    }
}

impl RegimeSampler for DagTruth {
    fn sample(&self, regime: &RegimeVector, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        self.dag.space.check(regime)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..n).map(|_| self.sample_row(regime, &mut rng)).collect())
    }
}

/// Randomly parameterized energy model; samples are Gibbs cells with
/// uniform jitter inside each bin.
#[derive(Debug, Clone)]
pub struct IfmTruth {
    pub model: EnergyModel,
    pub seed: u64,
}

pub fn make_ifm_truth(ifm: &IfmStructure, scale: f64, seed: u64) -> Result<IfmTruth> {
    let ranges = vec![IFM_TRUTH_RANGE; ifm.num_vars()];
    let grid = Grid::uniform(&ranges, DEFAULT_BINS)?;
    let model = EnergyModel::random(ifm.clone(), grid, TRUTH_HIDDEN, scale, seed)?;
    Ok(IfmTruth { model, seed })
}

impl RegimeSampler for IfmTruth {
    fn sample(&self, regime: &RegimeVector, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let bins = gibbs_bins(&self.model, regime, n, &GibbsOptions::seeded(seed))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let grid = self.model.grid();
        Ok(bins
            .into_iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(v, &b)| {
                        let e = grid.edges(v);
                        rng.gen_range(e[b]..e[b + 1])
                    })
                    .collect()
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthKind {
    Ifm,
    Dag,
}

#[derive(Debug, Clone)]
pub enum Truth {
    Dag(DagTruth),
    Ifm(IfmTruth),
}

impl Truth {
    pub fn kind(&self) -> TruthKind {
        match self {
            Truth::Dag(_) => TruthKind::Dag,
            Truth::Ifm(_) => TruthKind::Ifm,
        }
    }
}

/// Builds the requested simulator; DAG truth needs a DAG.
pub fn make_truth(kind: TruthKind, ifm: &IfmStructure, dag: Option<&Dag>, scale: f64, seed: u64) -> Result<Truth> {
    match kind {
        TruthKind::Ifm => Ok(Truth::Ifm(make_ifm_truth(ifm, scale, seed)?)),
        TruthKind::Dag => {
            let dag = dag.ok_or_else(|| Error::InvalidArgument("DAG truth needs a structure with a DAG".into()))?;
            Ok(Truth::Dag(make_dag_truth(dag, seed)))
        }
    }
}

impl RegimeSampler for Truth {
    fn sample(&self, regime: &RegimeVector, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        match self {
            Truth::Dag(t) => t.sample(regime, n, seed),
            Truth::Ifm(t) => t.sample(regime, n, seed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simbench::structures::{builtin_structure, DagIntervention, DagSpec};

    fn chain_dag() -> Dag {
        Dag::from_spec(&DagSpec {
            variables: vec!["a".into(), "b".into(), "c".into()],
            edges: vec![("a".into(), "b".into()), ("b".into(), "c".into())],
            interventions: vec![DagIntervention {
                name: "s".into(),
                targets: vec!["b".into()],
            }],
        })
        .unwrap()
    }

    fn mean_var(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
    }

    #[test]
    fn same_seed_same_samples() {
        let b = builtin_structure("sachs").unwrap();
        let dag = b.dag.unwrap();
        let t1 = make_dag_truth(&dag, 3);
        let t2 = make_dag_truth(&dag, 3);
        let r = b.ifm.space().baseline();
        assert_eq!(t1.sample(&r, 50, 1).unwrap(), t2.sample(&r, 50, 1).unwrap());
        let s = t1.sample(&r, 2000, 2).unwrap();
        assert!(s.iter().flatten().all(|v| v.is_finite()));
    }

    #[test]
    fn ancestral_order_respected() {
        // reverse-listed variables still sample parents first
        let dag = Dag::from_spec(&DagSpec {
            variables: vec!["c".into(), "b".into(), "a".into()],
            edges: vec![("a".into(), "b".into()), ("b".into(), "c".into())],
            interventions: vec![DagIntervention {
                name: "s".into(),
                targets: vec!["c".into()],
            }],
        })
        .unwrap();
        assert_eq!(dag.order, vec![2, 1, 0]);
        let t = make_dag_truth(&dag, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = RegimeVector(vec![0]);
        let row = t.sample_row(&r, &mut rng);
        // recompute c's conditional from the sampled parent only
        let (m, s) = t.conditional(0, &[row[1]], &r);
        assert!(((row[0] - m) / s).is_finite());
    }

    #[test]
    fn flip_changes_only_target_conditional() {
        let dag = chain_dag();
        let t = make_dag_truth(&dag, 11);
        let (r0, r1) = (RegimeVector(vec![0]), RegimeVector(vec![1]));
        let n = 20_000;
        let a0 = t.sample(&r0, n, 5).unwrap();
        let a1 = t.sample(&r1, n, 6).unwrap();
        // a is upstream of the target: same marginal
        let (m0, v0) = mean_var(&a0.iter().map(|r| r[0]).collect::<Vec<_>>());
        let (m1, _) = mean_var(&a1.iter().map(|r| r[0]).collect::<Vec<_>>());
        assert!((m0 - m1).abs() < 4.0 * (2.0 * v0 / n as f64).sqrt());
        // c | b is untouched: standardized residuals under either regime are N(0, 1)
        for rows in [&a0, &a1] {
            let z: Vec<f64> = rows
                .iter()
                .map(|r| {
                    let (m, s) = t.conditional(2, &[r[1]], &r0);
                    (r[2] - m) / s
                })
                .collect();
            let (zm, zv) = mean_var(&z);
            assert!(zm.abs() < 0.04 && (zv - 1.0).abs() < 0.05, "{zm} {zv}");
        }
        // b | a does change
        assert_ne!(t.conditional(1, &[0.3], &r0), t.conditional(1, &[0.3], &r1));
    }

    #[test]
    fn ifm_truth_samples_in_range() {
        let b = builtin_structure("chain3").unwrap();
        let t = make_ifm_truth(&b.ifm, 2.0, 4).unwrap();
        let s = t.sample(&b.ifm.space().baseline(), 200, 0).unwrap();
        assert_eq!(s.len(), 200);
        assert!(s.iter().flatten().all(|v| (-3.0..3.0).contains(v)));
        assert_eq!(s, t.sample(&b.ifm.space().baseline(), 200, 0).unwrap());
    }

    #[test]
    fn dag_truth_needs_dag() {
        let b = builtin_structure("chain3").unwrap();
        assert!(make_truth(TruthKind::Dag, &b.ifm, None, 1.0, 0).is_err());
    }
}
