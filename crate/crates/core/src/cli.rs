//! Command-line front end. Every subcommand prints JSON (or CSV for
//! samples) and maps failures to exit codes: 1 for usage errors, 2 for
//! domain errors, 3 for internal errors.

use std::ffi::OsString;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::energy::{discretize, fit, load_model, save_model, EnergyModel, FitOptions, DEFAULT_BINS, DEFAULT_HIDDEN};
use crate::error::{Error, Result};
use crate::estimators::{
    conformal_band, estimate_covshift, estimate_direct, estimate_ipw, fit_outcome, ConformalOptions, CovshiftOptions,
    OutcomeModel, OutcomeOptions,
};
use crate::identify::{identify, RoutePreference};
use crate::model::io::{load_datasets, load_graph, load_manifest, load_regimes, read_json, write_json};
use crate::model::{IfmStructure, RegimeDataset, RegimeVector};
use crate::sampling::{gibbs_sample, GibbsOptions};
use crate::simbench::{run_benchmark, BenchConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

/// Crate version and the energy-model file format version.
pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (model format 1)");

#[derive(Debug, Parser)]
#[command(name = "ifactor", version = VERSION, about = "Identify and estimate outcomes under unseen intervention regimes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RouteArg {
    Auto,
    JunctionTree,
    Algebraic,
}

impl From<RouteArg> for RoutePreference {
    fn from(r: RouteArg) -> Self {
        match r {
            RouteArg::Auto => RoutePreference::Auto,
            RouteArg::JunctionTree => RoutePreference::JunctionTree,
            RouteArg::Algebraic => RoutePreference::Algebraic,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EstimateMethod {
    Direct,
    Ipw,
    Covshift,
}

#[derive(Debug, clap::Args)]
struct OutcomeArgs {
    /// Hidden width of the outcome network.
    #[arg(long, default_value_t = 15)]
    outcome_hidden: usize,
    #[arg(long, default_value_t = 5e-3)]
    outcome_lr: f64,
    #[arg(long, default_value_t = 2000)]
    outcome_steps: usize,
    /// Minibatch size; 0 for full batch.
    #[arg(long, default_value_t = 256)]
    outcome_batch: usize,
}

impl OutcomeArgs {
    fn options(&self, seed: u64) -> OutcomeOptions {
        OutcomeOptions {
            hidden: self.outcome_hidden,
            lr: self.outcome_lr,
            steps: self.outcome_steps,
            batch: (self.outcome_batch > 0).then_some(self.outcome_batch),
            seed,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide whether a target regime is identifiable from the training regimes.
    Identify {
        #[arg(long)]
        graph: PathBuf,
        /// JSON list of training regimes.
        #[arg(long)]
        train: PathBuf,
        /// Target regime as comma-separated levels, e.g. `1,0,1`.
        #[arg(long)]
        target: String,
        #[arg(long, value_enum, default_value_t = RouteArg::Auto)]
        route: RouteArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit an energy model to training data by pseudo-likelihood.
    Fit {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        data_manifest: PathBuf,
        /// Model output file.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
        #[arg(long, default_value_t = DEFAULT_HIDDEN)]
        hidden: usize,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        /// Minibatch size; 0 for full batch.
        #[arg(long, default_value_t = 0)]
        batch: usize,
    },
    /// Fit the outcome regression `E[Y | x]` on pooled training data.
    FitOutcome {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        data_manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        outcome: OutcomeArgs,
    },
    /// Draw Gibbs samples from a fitted model; CSV to `--out` or stdout.
    Sample {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        regime: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        burn: usize,
        #[arg(long, default_value_t = 5)]
        thin: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate E[Y] under a target regime.
    Estimate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data_manifest: PathBuf,
        /// Comma-separated levels, or the file stem of a manifest entry.
        #[arg(long)]
        target: String,
        #[arg(long, value_enum)]
        method: EstimateMethod,
        #[arg(long)]
        seed: u64,
        /// Model draws for the direct and covariate-shift methods.
        #[arg(long, default_value_t = 5000)]
        nsamples: usize,
        /// Previously fitted outcome model for `direct`; fitted on the fly otherwise.
        #[arg(long)]
        outcome_model: Option<PathBuf>,
        #[arg(long)]
        skip_identify: bool,
        #[command(flatten)]
        outcome: OutcomeArgs,
    },
    /// Weighted split-conformal band for Y under a target regime.
    Conformal {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data_manifest: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 5000)]
        nsamples: usize,
        #[command(flatten)]
        outcome: OutcomeArgs,
    },
    /// Run the semi-synthetic benchmark described by a config file.
    Benchmark {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Worker threads; defaults to all cores.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Check a graph spec, and optionally datasets and a regime list, without computing.
    Validate {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        data_manifest: Option<PathBuf>,
        #[arg(long)]
        train: Option<PathBuf>,
    },
}

fn emit<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    writeln!(out, "{text}").map_err(|e| Error::io("<stdout>", e))
}

/// Levels like `1,0,1`, or the file stem of a manifest entry.
fn resolve_regime(text: &str, ifm: &IfmStructure, manifest: Option<&Path>) -> Result<RegimeVector> {
    let regime = match text.parse::<RegimeVector>() {
        Ok(r) => r,
        Err(parse_err) => {
            let Some(m) = manifest else { return Err(parse_err) };
            load_manifest(m)?
                .into_iter()
                .find(|e| e.file.file_stem().is_some_and(|s| s == text))
                .map(|e| e.regime)
                .ok_or(parse_err)?
        }
    };
    ifm.space().check(&regime)?;
    Ok(regime)
}

fn load_model_and_data(model: &Path, manifest: &Path) -> Result<(EnergyModel, Vec<RegimeDataset>)> {
    let model = load_model(model)?;
    let data = load_datasets(manifest, model.ifm())?;
    Ok((model, data))
}

/// Refuses targets without an identification certificate.
fn require_identifiable(ifm: &IfmStructure, data: &[RegimeDataset], target: &RegimeVector) -> Result<()> {
    let train = data.iter().map(|d| d.regime().clone()).collect();
    let id = identify(ifm, &train, target, RoutePreference::Auto)?;
    if id.identifiable {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "target {target} is not identifiable from the training regimes; pass --skip-identify to estimate anyway"
        )))
    }
}

#[derive(Serialize)]
struct ValidateReport {
    valid: bool,
    variables: usize,
    interventions: usize,
    factors: usize,
    regimes: Option<usize>,
    datasets: Option<usize>,
    rows: Option<usize>,
    has_outcome: Option<bool>,
}

fn run(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Identify {
            graph,
            train,
            target,
            route,
            out: path,
        } => {
            let ifm = load_graph(&graph)?;
            let train = load_regimes(&train, ifm.space())?;
            let target = resolve_regime(&target, &ifm, None)?;
            let id = identify(&ifm, &train, &target, route.into())?;
            if let Some(p) = path {
                write_json(&p, &id)?;
            }
            emit(out, &id)
        }
        Command::Fit {
            graph,
            data_manifest,
            out: path,
            seed,
            bins,
            hidden,
            lr,
            steps,
            batch,
        } => {
            let ifm = load_graph(&graph)?;
            let data = load_datasets(&data_manifest, &ifm)?;
            let grid = discretize(&data, ifm.var_names(), bins)?;
            let mut model = EnergyModel::new(ifm, grid, hidden, seed)?;
            let opts = FitOptions {
                lr,
                steps,
                batch: (batch > 0).then_some(batch),
                seed,
            };
            let log = fit(&mut model, &data, &opts)?;
            save_model(&model, &path)?;
            emit(out, &log)
        }
        Command::FitOutcome {
            graph,
            data_manifest,
            out: path,
            seed,
            outcome,
        } => {
            let ifm = load_graph(&graph)?;
            let data = load_datasets(&data_manifest, &ifm)?;
            let model = fit_outcome(&data, &outcome.options(seed))?;
            write_json(&path, &model)?;
            emit(
                out,
                &serde_json::json!({ "out": path, "rows": data.iter().map(|d| d.len()).sum::<usize>() }),
            )
        }
        Command::Sample {
            model,
            regime,
            n,
            seed,
            burn,
            thin,
            out: path,
        } => {
            let model = load_model(&model)?;
            let regime = resolve_regime(&regime, model.ifm(), None)?;
            let rows = gibbs_sample(&model, &regime, n, &GibbsOptions { burn, thin, seed })?;
            match path {
                Some(p) => {
                    crate::model::io::write_csv(&p, model.ifm().var_names(), &rows, None)?;
                    emit(out, &serde_json::json!({ "out": p, "rows": rows.len() }))
                }
                None => {
                    let mut w = csv::Writer::from_writer(out);
                    w.write_record(model.ifm().var_names())?;
                    for r in &rows {
                        w.write_record(r.iter().map(|v| v.to_string()))?;
                    }
                    w.flush().map_err(|e| Error::io("<stdout>", e))
                }
            }
        }
        Command::Estimate {
            model,
            data_manifest,
            target,
            method,
            seed,
            nsamples,
            outcome_model,
            skip_identify,
            outcome,
        } => {
            let (model, data) = load_model_and_data(&model, &data_manifest)?;
            let target = resolve_regime(&target, model.ifm(), Some(&data_manifest))?;
            if !skip_identify {
                require_identifiable(model.ifm(), &data, &target)?;
            }
            match method {
                EstimateMethod::Direct => {
                    let reg: OutcomeModel = match outcome_model {
                        Some(p) => read_json(&p)?,
                        None => fit_outcome(&data, &outcome.options(seed))?,
                    };
                    emit(out, &estimate_direct(&model, &reg, &target, nsamples, seed)?)
                }
                EstimateMethod::Ipw => emit(out, &estimate_ipw(&model, &data, &target)?),
                EstimateMethod::Covshift => {
                    let opts = CovshiftOptions {
                        outcome: outcome.options(seed),
                        nsamples,
                        seed,
                    };
                    emit(out, &estimate_covshift(&model, &data, &target, &opts)?)
                }
            }
        }
        Command::Conformal {
            model,
            data_manifest,
            target,
            alpha,
            seed,
            nsamples,
            outcome,
        } => {
            let (model, data) = load_model_and_data(&model, &data_manifest)?;
            let target = resolve_regime(&target, model.ifm(), Some(&data_manifest))?;
            require_identifiable(model.ifm(), &data, &target)?;
            let opts = ConformalOptions {
                outcome: outcome.options(seed),
                nsamples,
                seed,
            };
            emit(out, &conformal_band(&model, &data, &target, alpha, &opts)?)
        }
        Command::Benchmark {
            config,
            out: path,
            csv,
            jobs,
        } => {
            let cfg: BenchConfig = read_json(&config)?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.unwrap_or(0))
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
            let report = pool.install(|| run_benchmark(&cfg))?;
            write_json(&path, &report)?;
            if let Some(c) = &csv {
                let f = std::fs::File::create(c).map_err(|e| Error::io(c, e))?;
                report.write_csv(std::io::BufWriter::new(f))?;
            }
            emit(out, &report.summary)
        }
        Command::Validate {
            graph,
            data_manifest,
            train,
        } => {
            let ifm = load_graph(&graph)?;
            let regimes = match &train {
                Some(t) => Some(load_regimes(t, ifm.space())?.len()),
                None => None,
            };
            let data = match &data_manifest {
                Some(m) => Some(load_datasets(m, &ifm)?),
                None => None,
            };
            emit(
                out,
                &ValidateReport {
                    valid: true,
                    variables: ifm.num_vars(),
                    interventions: ifm.space().dim(),
                    factors: ifm.num_factors(),
                    regimes,
                    datasets: data.as_ref().map(Vec::len),
                    rows: data.as_ref().map(|d| d.iter().map(RegimeDataset::len).sum()),
                    has_outcome: data.as_ref().map(|d| d.iter().all(|x| x.y().is_some())),
                },
            )
        }
    }
}

/// Help text of the subcommand named in `args`, or the top-level help.
fn help_for(args: &[OsString]) -> String {
    let mut cmd = Cli::command();
    let name = args.get(1).and_then(|a| a.to_str()).unwrap_or("");
    match cmd.find_subcommand_mut(name) {
        Some(sub) => sub.render_help().to_string(),
        None => cmd.render_help().to_string(),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn dispatch<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let rendered = e.render().to_string();
                    let reason = rendered.lines().next().unwrap_or("invalid usage");
                    let _ = writeln!(err, "{reason}\n\n{}", help_for(&args));
                    EXIT_USAGE
                }
            };
        }
    };
    match catch_unwind(AssertUnwindSafe(|| run(cli.command, out))) {
        Ok(Ok(())) => EXIT_OK,
        Ok(Err(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_DOMAIN
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            let _ = writeln!(err, "internal error: {msg}");
            EXIT_INTERNAL
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::MODEL_FORMAT_VERSION;

    #[test]
    fn version_string_tracks_model_format() {
        assert!(VERSION.starts_with(env!("CARGO_PKG_VERSION")));
        assert!(VERSION.ends_with(&format!("(model format {MODEL_FORMAT_VERSION})")));
    }

    #[test]
    fn clap_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn usage_errors_exit_one() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(dispatch(["ifactor", "identify", "--bogus"], &mut o, &mut e), EXIT_USAGE);
        let text = String::from_utf8(e).unwrap();
        assert!(text.contains("--bogus") && text.contains("--graph"));
    }

    #[test]
    fn missing_seed_is_usage_error() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = dispatch(
            ["ifactor", "sample", "--model", "m.json", "--regime", "0", "--n", "3"],
            &mut o,
            &mut e,
        );
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn missing_file_is_domain_error() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = dispatch(
            ["ifactor", "validate", "--graph", "/nonexistent/g.json"],
            &mut o,
            &mut e,
        );
        assert_eq!(code, EXIT_DOMAIN);
    }
}
