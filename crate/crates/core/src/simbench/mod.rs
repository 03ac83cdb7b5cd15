//! Semi-synthetic benchmark: ground-truth simulators over built-in
//! structures, outcome generation, Monte Carlo ground truth, metrics,
//! baselines and the end-to-end runner.

mod baselines;
mod bench;
mod metrics;
mod outcome;
mod structures;
mod truth;

pub use baselines::{GaussianDag, RidgeBaseline};
pub use bench::{run_benchmark, BenchConfig, BenchmarkReport, Method, MethodResult, MethodSummary, ProblemReport};
pub use metrics::{average_ranks, median, prmse, rcor};
pub use outcome::{
    ground_truth_from_samples, ground_truth_mu, linear_score, make_outcome, GroundTruth, OutcomePreset, OutcomeTruth,
};
pub use structures::{builtin_structure, Builtin, Dag, DagIntervention, DagSpec, BUILTIN_NAMES};
pub use truth::{
    make_dag_truth, make_ifm_truth, make_truth, DagTruth, IfmTruth, Truth, TruthKind, SCALE_FLOOR, TRUTH_HIDDEN,
};
