//! Interventional factor model: intervention space, regimes, factorization,
//! datasets and the σ-graph.

mod dataset;
mod graph;
pub mod io;
mod space;
mod structure;

pub use dataset::RegimeDataset;
pub use graph::{EdgeList, SigmaGraph};
pub use space::{restrict_regime, sigma_zero_set, InterventionSpace, RegimeSet, RegimeVector};
pub use structure::{normalize_factors, sigma_graph, FactorSpec, IfmStructure};
