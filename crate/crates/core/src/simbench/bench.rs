use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::baselines::{GaussianDag, RidgeBaseline};
use super::metrics::{median, prmse, rcor};
use super::outcome::{ground_truth_from_samples, make_outcome, OutcomePreset, OutcomeTruth};
use super::structures::builtin_structure;
use super::truth::{make_truth, TruthKind};
use crate::energy::{discretize, fit, EnergyModel, FitOptions, DEFAULT_BINS, DEFAULT_HIDDEN};
use crate::error::{Error, Result};
use crate::estimators::{
    estimate_covshift, estimate_direct, estimate_ipw, fit_outcome, CovshiftOptions, OutcomeOptions, RegimeSampler,
};
use crate::identify::{identify, RoutePreference};
use crate::model::{RegimeDataset, RegimeVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    IfmDirect,
    IfmIpw,
    IfmCovshift,
    Ridge,
    DagDirect,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::IfmDirect => "ifm_direct",
            Method::IfmIpw => "ifm_ipw",
            Method::IfmCovshift => "ifm_covshift",
            Method::Ridge => "ridge",
            Method::DagDirect => "dag_direct",
        }
    }

    fn uses_energy(self) -> bool {
        matches!(self, Method::IfmDirect | Method::IfmIpw | Method::IfmCovshift)
    }
}

fn default_methods() -> Vec<Method> {
    vec![Method::IfmDirect, Method::IfmIpw, Method::Ridge]
}
fn default_problems() -> usize {
    1
}
fn default_n_baseline() -> usize {
    5000
}
fn default_n_interventional() -> usize {
    500
}
fn default_n_mc() -> usize {
    25_000
}
fn default_bins() -> usize {
    DEFAULT_BINS
}
fn default_hidden() -> usize {
    DEFAULT_HIDDEN
}
fn default_nsamples() -> usize {
    5000
}
fn default_ridge_lambda() -> f64 {
    1e-3
}
fn default_truth_scale() -> f64 {
    3.0
}

/// Benchmark configuration. Only `structure`, `truth` and `seed` are
/// required.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub structure: String,
    pub truth: TruthKind,
    pub seed: u64,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Outcome problems sharing one simulator and one training sample.
    #[serde(default = "default_problems")]
    pub problems: usize,
    #[serde(default = "default_n_baseline")]
    pub n_baseline: usize,
    #[serde(default = "default_n_interventional")]
    pub n_interventional: usize,
    /// Truth draws per test regime for the ground-truth means.
    #[serde(default = "default_n_mc")]
    pub n_mc: usize,
    #[serde(default)]
    pub outcome_preset: OutcomePreset,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default)]
    pub energy: FitOptions,
    #[serde(default)]
    pub outcome: OutcomeOptions,
    /// Model draws per target for the direct and covariate-shift methods.
    #[serde(default = "default_nsamples")]
    pub nsamples: usize,
    #[serde(default = "default_ridge_lambda")]
    pub ridge_lambda: f64,
    /// Output-layer scale of the random IFM truth.
    #[serde(default = "default_truth_scale")]
    pub truth_scale: f64,
}

impl BenchConfig {
    /// SHA-256 of the canonical JSON serialization.
    pub fn fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    pub mu_hat: Vec<f64>,
    pub prmse: f64,
    /// Absent with fewer than two test regimes.
    pub rcor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemReport {
    pub problem: usize,
    pub outcome: OutcomeTruth,
    pub mu_true: Vec<f64>,
    pub mu_true_se: Vec<f64>,
    pub var_true: Vec<f64>,
    pub methods: Vec<MethodResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub median_prmse: f64,
    pub mean_prmse: f64,
    pub median_rcor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub config: BenchConfig,
    pub config_fingerprint: String,
    /// Test regimes that were scored, in order.
    pub test_regimes: Vec<RegimeVector>,
    /// Test regimes without an identification certificate; never scored.
    pub unidentifiable: Vec<RegimeVector>,
    pub energy_fit_objective: Option<Vec<f64>>,
    pub problems: Vec<ProblemReport>,
    pub summary: Vec<MethodSummary>,
    /// Wall-clock time; excluded from determinism comparisons.
    pub runtime_seconds: f64,
}

impl BenchmarkReport {
    /// Report JSON with the runtime field zeroed.
    pub fn deterministic_json(&self) -> String {
        let mut r = self.clone();
        r.runtime_seconds = 0.0;
        serde_json::to_string_pretty(&r).expect("report serializes")
    }

    /// One row per problem, method and scored regime.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["problem", "method", "regime", "mu_hat", "mu_true", "var_true"])?;
        for p in &self.problems {
            for m in &p.methods {
                for (i, r) in self.test_regimes.iter().enumerate() {
                    out.write_record([
                        p.problem.to_string(),
                        m.method.name().to_string(),
                        r.to_string(),
                        m.mu_hat[i].to_string(),
                        p.mu_true[i].to_string(),
                        p.var_true[i].to_string(),
                    ])?;
                }
            }
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Independent stream seed for a `(stage, index)` pair.
fn sub_seed(seed: u64, stage: u64, index: u64) -> u64 {
    // splitmix64 finalizer over a mixed key
    let mut z = seed
        .wrapping_add(stage.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(index.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const STAGE_TRUTH: u64 = 1;
const STAGE_DATA: u64 = 2;
const STAGE_MC: u64 = 3;
const STAGE_CALIB: u64 = 4;
const STAGE_OUTCOME: u64 = 5;
const STAGE_Y: u64 = 6;
const STAGE_FIT: u64 = 7;
const STAGE_ESTIMATE: u64 = 8;

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.at_stage(name))
}

fn validate(cfg: &BenchConfig) -> Result<()> {
    let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
    if cfg.problems == 0 {
        return bad("problems must be positive");
    }
    if cfg.methods.is_empty() {
        return bad("no methods configured");
    }
    if cfg.n_baseline < 2 || cfg.n_interventional == 0 || cfg.n_mc < 2 || cfg.nsamples == 0 {
        return bad("sample sizes must be positive (n_baseline and n_mc at least 2)");
    }
    Ok(())
}

/// Runs the whole pipeline: simulate training data, fit the estimators
/// once, then for each outcome problem draw `y`, estimate every scored test
/// regime and compare with Monte Carlo ground truth.
///
/// Problems run on the current rayon pool; results are ordered by problem
/// index and depend only on the config.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchmarkReport> {
    let started = Instant::now();
    validate(cfg)?;
    let b = stage("structure", builtin_structure(&cfg.structure))?;
    let space = b.ifm.space().clone();
    if cfg.methods.contains(&Method::DagDirect) && b.dag.is_none() {
        return Err(Error::InvalidArgument(format!(
            "method dag_direct needs a DAG; `{}` has none",
            cfg.structure
        )));
    }

    let mut test_regimes = Vec::new();
    let mut unidentifiable = Vec::new();
    for t in b.test.iter() {
        let id = stage("identify", identify(&b.ifm, &b.train, t, RoutePreference::Auto))?;
        if id.identifiable {
            test_regimes.push(t.clone());
        } else {
            unidentifiable.push(t.clone());
        }
    }

    let truth = stage(
        "truth",
        make_truth(
            cfg.truth,
            &b.ifm,
            b.dag.as_ref(),
            cfg.truth_scale,
            sub_seed(cfg.seed, STAGE_TRUTH, 0),
        ),
    )?;
    let train_x = stage(
        "simulate",
        b.train
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let n = if r.is_baseline() {
                    cfg.n_baseline
                } else {
                    cfg.n_interventional
                };
                truth.sample(r, n, sub_seed(cfg.seed, STAGE_DATA, i as u64))
            })
            .collect::<Result<Vec<_>>>(),
    )?;
    let mc: Vec<Vec<Vec<f64>>> = stage(
        "ground truth",
        test_regimes
            .par_iter()
            .enumerate()
            .map(|(i, r)| truth.sample(r, cfg.n_mc, sub_seed(cfg.seed, STAGE_MC, i as u64)))
            .collect::<Result<Vec<_>>>(),
    )?;
    let calib = stage(
        "ground truth",
        truth.sample(&space.baseline(), cfg.n_mc, sub_seed(cfg.seed, STAGE_CALIB, 0)),
    )?;

    let x_only: Vec<RegimeDataset> = stage(
        "simulate",
        b.train
            .iter()
            .zip(&train_x)
            .map(|(r, x)| RegimeDataset::new(r.clone(), x.clone(), None))
            .collect::<Result<Vec<_>>>(),
    )?;

    let (energy, energy_log) = if cfg.methods.iter().any(|m| m.uses_energy()) {
        let grid = stage("fit energy", discretize(&x_only, b.ifm.var_names(), cfg.bins))?;
        let mut model = stage(
            "fit energy",
            EnergyModel::new(b.ifm.clone(), grid, cfg.hidden, sub_seed(cfg.seed, STAGE_FIT, 0)),
        )?;
        let opts = FitOptions {
            seed: sub_seed(cfg.seed, STAGE_FIT, 1),
            ..cfg.energy.clone()
        };
        let log = stage("fit energy", fit(&mut model, &x_only, &opts))?;
        (Some(model), Some(log.objective))
    } else {
        (None, None)
    };
    let gdag = match (&b.dag, cfg.methods.contains(&Method::DagDirect)) {
        (Some(dag), true) => Some(stage("fit dag", GaussianDag::fit(dag, &x_only))?),
        _ => None,
    };

    let problems = (0..cfg.problems)
        .into_par_iter()
        .map(|p| {
            let pi = p as u64;
            let outcome = stage(
                "outcome",
                make_outcome(&calib, cfg.outcome_preset, sub_seed(cfg.seed, STAGE_OUTCOME, pi)),
            )?;
            let gts: Vec<_> = mc.iter().map(|xs| ground_truth_from_samples(&outcome, xs)).collect();
            let data = stage(
                "simulate",
                x_only
                    .iter()
                    .enumerate()
                    .map(|(i, d)| {
                        let y = outcome.draw_y(d.x(), sub_seed(cfg.seed, STAGE_Y, pi << 16 | i as u64));
                        d.with_y(y)
                    })
                    .collect::<Result<Vec<_>>>(),
            )?;
            let est_seed = |k: usize| sub_seed(cfg.seed, STAGE_ESTIMATE, pi << 16 | k as u64);
            let outcome_opts = OutcomeOptions {
                seed: est_seed(0xffff),
                ..cfg.outcome.clone()
            };
            let needs_outcome = cfg
                .methods
                .iter()
                .any(|m| matches!(m, Method::IfmDirect | Method::DagDirect));
            let reg = if needs_outcome {
                Some(stage("fit outcome", fit_outcome(&data, &outcome_opts))?)
            } else {
                None
            };
            let mu_true: Vec<f64> = gts.iter().map(|g| g.mu).collect();
            let var_true: Vec<f64> = gts.iter().map(|g| g.var_y).collect();
            let mut methods = Vec::with_capacity(cfg.methods.len());
            for &m in &cfg.methods {
                let mu_hat = test_regimes
                    .iter()
                    .enumerate()
                    .map(|(k, t)| -> Result<f64> {
                        let s = est_seed(k);
                        Ok(match m {
                            Method::IfmDirect => {
                                let model = energy.as_ref().expect("fitted");
                                estimate_direct(model, reg.as_ref().expect("fitted"), t, cfg.nsamples, s)?.mu_hat
                            }
                            Method::IfmIpw => estimate_ipw(energy.as_ref().expect("fitted"), &data, t)?.mu_hat,
                            Method::IfmCovshift => {
                                let opts = CovshiftOptions {
                                    outcome: outcome_opts.clone(),
                                    nsamples: cfg.nsamples,
                                    seed: s,
                                };
                                estimate_covshift(energy.as_ref().expect("fitted"), &data, t, &opts)?.mu_hat
                            }
                            Method::Ridge => RidgeBaseline::fit(&space, &data, cfg.ridge_lambda)?.predict(t),
                            Method::DagDirect => {
                                let g = gdag.as_ref().expect("fitted");
                                estimate_direct(g, reg.as_ref().expect("fitted"), t, cfg.nsamples, s)?.mu_hat
                            }
                        })
                    })
                    .collect::<Result<Vec<f64>>>();
                let mu_hat = stage(&format!("estimate {}", m.name()), mu_hat)?;
                let score = stage("score", prmse(&mu_hat, &mu_true, &var_true))?;
                let rc = if mu_hat.len() >= 2 {
                    Some(stage("score", rcor(&mu_hat, &mu_true))?)
                } else {
                    None
                };
                methods.push(MethodResult {
                    method: m,
                    mu_hat,
                    prmse: score,
                    rcor: rc,
                });
            }
            Ok(ProblemReport {
                problem: p,
                outcome,
                mu_true,
                mu_true_se: gts.iter().map(|g| g.se).collect(),
                var_true,
                methods,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let summary = cfg
        .methods
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let pr: Vec<f64> = problems.iter().map(|p| p.methods[i].prmse).collect();
            let rc: Vec<f64> = problems.iter().filter_map(|p| p.methods[i].rcor).collect();
            MethodSummary {
                method: m,
                median_prmse: median(&pr).unwrap_or(f64::NAN),
                mean_prmse: pr.iter().sum::<f64>() / pr.len() as f64,
                median_rcor: median(&rc),
            }
        })
        .collect();

    Ok(BenchmarkReport {
        config: cfg.clone(),
        config_fingerprint: cfg.fingerprint(),
        test_regimes,
        unidentifiable,
        energy_fit_objective: energy_log,
        problems,
        summary,
        runtime_seconds: started.elapsed().as_secs_f64(),
    })
}
