//! Acceptance suite: one pass/fail line per criterion. Criterion 10 is
//! logged only. Exits non-zero when any gating criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use common::{random_instance, reconstruct, tv, TableIfm};
use ifactor::energy::{pll_gradient, pseudo_loglik, EnergyModel, Grid};
use ifactor::estimators::{
    conformal_band, estimate_ipw, ConformalOptions, OutcomeOptions, RegimeDensity, RegimeSampler,
};
use ifactor::identify::{build_system, identify, solve_pr, verify_pr, RoutePreference};
use ifactor::model::io::{load_graph, load_regimes};
use ifactor::model::{IfmStructure, InterventionSpace, RegimeDataset, RegimeVector};
use ifactor::sampling::{exact_density, gibbs_bins, GibbsOptions};
use ifactor::simbench::{builtin_structure, run_benchmark, BenchConfig, Method};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, StandardNormal};

type Outcome = Result<String, String>;

fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn regime(s: &str) -> RegimeVector {
    s.parse().unwrap()
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let t = start.elapsed();
    if t <= limit {
        Ok(t)
    } else {
        Err(format!("took {t:.2?}, limit {limit:?}"))
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn chain3_certificate() -> Outcome {
    let start = Instant::now();
    let ifm = load_graph(&fixture("chain3.json")).map_err(|e| e.to_string())?;
    let train = load_regimes(&fixture("chain3_train.json"), ifm.space()).map_err(|e| e.to_string())?;
    let target = regime("1,1,1");
    let expected = [("1,1,0", 1.0), ("0,1,1", 1.0), ("0,1,0", -1.0)];
    for route in [RoutePreference::JunctionTree, RoutePreference::Algebraic] {
        let id = identify(&ifm, &train, &target, route).map_err(|e| e.to_string())?;
        let q = id.exponents.ok_or_else(|| format!("{route:?}: not identifiable"))?;
        for (i, r) in train.iter().enumerate() {
            let want = expected.iter().find(|(s, _)| regime(s) == *r).map_or(0.0, |(_, v)| *v);
            ensure((q[i] - want).abs() < 1e-12, || {
                format!("{route:?}: q[{r}] = {} (want {want})", q[i])
            })?;
        }
    }
    let t = within(Duration::from_secs(1), start)?;
    Ok(format!(
        "both routes give +1 (1,1,0), +1 (0,1,1), -1 (0,1,0) in {t:.2?}"
    ))
}

fn triangle_system() -> Outcome {
    let start = Instant::now();
    let ifm = load_graph(&fixture("triangle.json")).map_err(|e| e.to_string())?;
    let train = load_regimes(&fixture("triangle_train.json"), ifm.space()).map_err(|e| e.to_string())?;
    let sys = build_system(&ifm, &train, &regime("1,1,1"));
    let q = [1.0, -1.0, -1.0, 1.0, -1.0, 1.0, 1.0];
    let aq = sys.a.mul_vec(&q);
    ensure(aq == sys.b, || format!("A q = {aq:?}, b = {:?}", sys.b))?;
    let sol = solve_pr(&sys).map_err(|u| format!("system reported inconsistent: {u:?}"))?;
    ensure(verify_pr(&ifm, &sol.certificate), || {
        "returned solution fails verify_pr".into()
    })?;
    ensure(sol.solution_dim == 0, || {
        format!("solution space has dimension {}", sol.solution_dim)
    })?;
    let t = within(Duration::from_secs(1), start)?;
    Ok(format!("A q = b exactly, unique solution verified in {t:.2?}"))
}

fn triangle_leave_one_out() -> Outcome {
    let ifm = load_graph(&fixture("triangle.json")).map_err(|e| e.to_string())?;
    let train = load_regimes(&fixture("triangle_train.json"), ifm.space()).map_err(|e| e.to_string())?;
    for i in 0..train.len() {
        let reduced = train.without(i);
        let id = identify(&ifm, &reduced, &regime("1,1,1"), RoutePreference::Auto).map_err(|e| e.to_string())?;
        ensure(!id.identifiable, || {
            format!("dropping {} still identifiable", train.get(i))
        })?;
    }
    Ok(format!("all {} reductions unidentifiable", train.len()))
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut certified = 0;
    let instances = 500;
    for seed in 0..instances {
        let (ifm, train, target) = random_instance(seed);
        let bins = 2 + (seed % 2) as usize;
        let oracle = TableIfm::random(ifm.clone(), bins, seed + 1000);
        let id = identify(&ifm, &train, &target, RoutePreference::Auto).map_err(|e| e.to_string())?;
        if let Some(q) = id.exponents {
            certified += 1;
            let d = tv(&reconstruct(&oracle, &train, &q), &oracle.density(&target));
            ensure(d <= 1e-9, || format!("instance {seed}: TV {d:e}"))?;
        }
    }
    ensure(certified >= 50, || format!("only {certified} certified instances"))?;
    let t = within(Duration::from_secs(30), start)?;
    Ok(format!(
        "{certified}/{instances} certificates reconstruct the target (TV <= 1e-9) in {t:.2?}"
    ))
}

fn random_rows(m: usize, regimes: &[RegimeVector], n: usize, rng: &mut ChaCha8Rng) -> Vec<RegimeDataset> {
    regimes
        .iter()
        .map(|r| {
            let x = (0..n)
                .map(|_| (0..m).map(|_| rng.gen_range(0.0..1.0)).collect())
                .collect();
            RegimeDataset::new(r.clone(), x, None).unwrap()
        })
        .collect()
}

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let models = 12;
    for seed in 0..models {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.gen_range(1..=3);
        let space = InterventionSpace::binary(2).unwrap();
        let factors: Vec<(Vec<usize>, Vec<usize>)> = (0..m)
            .map(|v| {
                let mut vars = vec![v];
                if v + 1 < m {
                    vars.push(v + 1);
                }
                (vars, vec![v % 2])
            })
            .chain(std::iter::once((vec![0], vec![0, 1])))
            .collect();
        let refs: Vec<(&[usize], &[usize])> = factors.iter().map(|(a, b)| (a.as_slice(), b.as_slice())).collect();
        let ifm = IfmStructure::from_indices(m, space.clone(), &refs).map_err(|e| e.to_string())?;
        let grid = Grid::uniform(&vec![(0.0, 1.0); m], 3).map_err(|e| e.to_string())?;
        let mut model = EnergyModel::random(ifm, grid, 4, 1.5, seed).map_err(|e| e.to_string())?;
        let regimes: Vec<RegimeVector> = space.all_regimes().iter().take(3).cloned().collect();
        let data = random_rows(m, &regimes, 15, &mut rng);
        let g = pll_gradient(&model, &data).map_err(|e| e.to_string())?;
        let theta = model.params();
        let h = 1e-5;
        let mut fd = vec![0.0; theta.len()];
        for i in 0..theta.len() {
            let mut p = theta.clone();
            p[i] += h;
            model.set_params(&p);
            let up = pseudo_loglik(&model, &data).unwrap();
            p[i] -= 2.0 * h;
            model.set_params(&p);
            let down = pseudo_loglik(&model, &data).unwrap();
            fd[i] = (up - down) / (2.0 * h);
        }
        model.set_params(&theta);
        let diff: f64 = fd.iter().zip(&g).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = fd
            .iter()
            .map(|a| a * a)
            .sum::<f64>()
            .sqrt()
            .max(g.iter().map(|a| a * a).sum::<f64>().sqrt());
        let rel = diff / scale.max(1e-12);
        worst = worst.max(rel);
        ensure(rel < 1e-4, || format!("model {seed}: relative error {rel:e}"))?;
    }
    let t = within(Duration::from_secs(10), start)?;
    Ok(format!("{models} models, worst relative error {worst:.2e} in {t:.2?}"))
}

fn gibbs_correctness() -> Outcome {
    let start = Instant::now();
    let ifm = IfmStructure::from_indices(
        2,
        InterventionSpace::binary(1).unwrap(),
        &[(&[0, 1], &[0]), (&[1], &[])],
    )
    .map_err(|e| e.to_string())?;
    let grid = Grid::uniform(&[(0.0, 1.0), (0.0, 1.0)], 3).map_err(|e| e.to_string())?;
    let model = EnergyModel::random(ifm, grid, 6, 3.0, 5).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for r in ["0", "1"] {
        let exact = exact_density(&model, &regime(r)).map_err(|e| e.to_string())?;
        let draws = gibbs_bins(&model, &regime(r), 50_000, &GibbsOptions::seeded(9)).map_err(|e| e.to_string())?;
        let d = exact.tv_to_samples(&draws);
        worst = worst.max(d);
        ensure(d <= 0.02, || format!("regime {r}: TV {d:.4}"))?;
    }
    let t = within(Duration::from_secs(30), start)?;
    Ok(format!("worst TV {worst:.4} at 50000 draws in {t:.2?}"))
}

/// `x ~ N(0.8 σ, I)` in two dimensions with exact densities and sampling.
struct GaussShift;

impl GaussShift {
    fn mean(r: &RegimeVector) -> [f64; 2] {
        [0.8 * r.levels()[0] as f64, 0.8 * r.levels()[1] as f64]
    }
}

impl RegimeDensity for GaussShift {
    fn log_density_unnorm(&self, x: &[f64], r: &RegimeVector) -> f64 {
        let m = Self::mean(r);
        -0.5 * ((x[0] - m[0]).powi(2) + (x[1] - m[1]).powi(2))
    }
}

impl RegimeSampler for GaussShift {
    fn sample(&self, r: &RegimeVector, n: usize, seed: u64) -> ifactor::Result<Vec<Vec<f64>>> {
        let m = Self::mean(r);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..n)
            .map(|_| {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                vec![m[0] + a, m[1] + b]
            })
            .collect())
    }
}

fn conformal_coverage() -> Outcome {
    let start = Instant::now();
    let train = ["0,0", "1,0", "0,1"].map(regime);
    let target = regime("1,1");
    let noise = Normal::new(0.0, 0.5).unwrap();
    let f = |x: &[f64]| x[0] + 0.5 * x[1];
    let reps = 200;
    let tests_per_rep = 50;
    let mut covered = 0usize;
    let mut infinite = 0usize;
    for rep in 0..reps as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + rep);
        let data: Vec<RegimeDataset> = train
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let x = GaussShift.sample(r, 200, rep * 10 + i as u64).unwrap();
                let y = x.iter().map(|x| f(x) + rng.sample(noise)).collect();
                RegimeDataset::new(r.clone(), x, Some(y)).unwrap()
            })
            .collect();
        let opts = ConformalOptions {
            outcome: OutcomeOptions {
                hidden: 8,
                lr: 1e-2,
                steps: 300,
                batch: Some(128),
                seed: rep,
            },
            nsamples: 1000,
            seed: rep,
        };
        let band = conformal_band(&GaussShift, &data, &target, 0.1, &opts).map_err(|e| e.to_string())?;
        if band.half_width.is_infinite() {
            infinite += 1;
        }
        let xs = GaussShift.sample(&target, tests_per_rep, 1_000_000 + rep).unwrap();
        for x in &xs {
            let y = f(x) + rng.sample(noise);
            if y >= band.lo && y <= band.hi {
                covered += 1;
            }
        }
    }
    let cov = covered as f64 / (reps * tests_per_rep) as f64;
    ensure((0.85..=1.0).contains(&cov), || format!("coverage {cov:.3}"))?;
    let t = within(Duration::from_secs(120), start)?;
    Ok(format!(
        "coverage {cov:.3} over {reps} replications ({infinite} infinite bands) in {t:.2?}"
    ))
}

fn ipw_consistency() -> Outcome {
    let start = Instant::now();
    let b = builtin_structure("chain3").map_err(|e| e.to_string())?;
    let oracle = TableIfm::random(b.ifm.clone(), 3, 77);
    let g = |x: &[f64]| (0.5 * (x[0] - x[2])).tanh() + 0.3 * x[1];
    let target = regime("1,1,1");
    let noise = Normal::new(0.0, 0.3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let data: Vec<RegimeDataset> = b
        .train
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let x = oracle.sample(r, 5000, 500 + i as u64).unwrap();
            let y = x.iter().map(|x| g(x) + rng.sample(noise)).collect();
            RegimeDataset::new(r.clone(), x, Some(y)).unwrap()
        })
        .collect();
    let est = estimate_ipw(&oracle, &data, &target).map_err(|e| e.to_string())?;
    let exact = oracle.expect(&target, g);
    let se = est.se.ok_or("no standard error")?;
    let z = (est.mu_hat - exact).abs() / se;
    ensure(z <= 3.0, || {
        format!("|mu_hat - mu| = {:.4} is {z:.2} SE", (est.mu_hat - exact).abs())
    })?;
    let t = within(Duration::from_secs(60), start)?;
    Ok(format!(
        "mu_hat {:.4} vs exact {exact:.4} ({z:.2} SE) in {t:.2?}",
        est.mu_hat
    ))
}

fn benchmark_determinism() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in 0..2 {
        let report = dir.path().join(format!("report{run}.json"));
        let csv = dir.path().join(format!("report{run}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_ifactor"))
            .arg("benchmark")
            .arg("--config")
            .arg(fixture("bench_chain3.json"))
            .arg("--out")
            .arg(&report)
            .arg("--csv")
            .arg(&csv)
            .arg("--jobs")
            .arg(if run == 0 { "1" } else { "4" })
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), || {
            String::from_utf8_lossy(&status.stderr).into_owned()
        })?;
        let mut json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).map_err(|e| e.to_string())?;
        json["runtime_seconds"] = serde_json::Value::Null;
        outputs.push((std::fs::read(&csv).unwrap(), json));
    }
    ensure(outputs[0].0 == outputs[1].0, || "CSV files differ".into())?;
    ensure(outputs[0].1 == outputs[1].1, || "reports differ beyond runtime".into())?;
    let t = within(Duration::from_secs(300), start)?;
    Ok(format!("byte-identical CSV across 1 and 4 worker threads in {t:.2?}"))
}

fn smoke_ifm_vs_ridge() -> Outcome {
    let cfg: BenchConfig = serde_json::from_value(serde_json::json!({
        "structure": "chain3",
        "truth": "ifm",
        "seed": 99,
        "problems": 20,
        "methods": ["ifm_direct", "ridge"]
    }))
    .map_err(|e| e.to_string())?;
    let report = run_benchmark(&cfg).map_err(|e| e.to_string())?;
    let med = |m: Method| {
        report
            .summary
            .iter()
            .find(|s| s.method == m)
            .map(|s| s.median_prmse)
            .unwrap()
    };
    let (ifm, ridge) = (med(Method::IfmDirect), med(Method::Ridge));
    let msg = format!("median pRMSE ifm_direct {ifm:.4} vs ridge {ridge:.4} over 20 problems");
    if ifm <= ridge {
        Ok(msg)
    } else {
        Err(msg)
    }
}

type Criterion = (u32, &'static str, bool, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "chain3 certificate via both routes", true, chain3_certificate),
        (2, "triangle algebraic system", true, triangle_system),
        (3, "triangle leave-one-out negatives", true, triangle_leave_one_out),
        (4, "brute-force oracle equivalence", true, oracle_equivalence),
        (5, "pseudo-likelihood gradient check", true, gradient_check),
        (6, "Gibbs sampler correctness", true, gibbs_correctness),
        (7, "weighted conformal coverage", true, conformal_coverage),
        (8, "IPW consistency", true, ipw_consistency),
        (9, "benchmark determinism", true, benchmark_determinism),
        (10, "IFM-direct vs ridge smoke expectation", false, smoke_ifm_vs_ridge),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (n, name, gating, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str()) || *f == n.to_string()) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let (tag, detail) = match (&outcome, gating) {
            (Ok(d), _) => ("PASS", d.clone()),
            (Err(d), true) => {
                failed += 1;
                ("FAIL", d.clone())
            }
            (Err(d), false) => ("MISS", format!("{d} (non-gating)")),
        };
        println!("criterion {n:>2} [{tag}] {name}: {detail}");
    }
    if failed > 0 {
        println!("{failed} gating criteria failed");
        std::process::exit(1);
    }
}
