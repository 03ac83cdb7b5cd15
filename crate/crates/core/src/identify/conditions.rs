use serde::{Deserialize, Serialize};

use super::chordal::triangulate;
use super::jtree::{build_junction_tree, JunctionTree};
use crate::model::{normalize_factors, sigma_graph, sigma_zero_set, IfmStructure, RegimeSet, RegimeVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliqueCondition {
    pub clique: Vec<usize>,
    pub required: usize,
    pub missing: Vec<RegimeVector>,
}

/// Per-clique coverage of the training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub passed: bool,
    pub target_in_train: bool,
    pub cliques: Vec<CliqueCondition>,
    /// Equal support across regimes is assumed, never tested.
    pub common_support: String,
}

pub(crate) fn junction_tree_of(ifm: &IfmStructure) -> JunctionTree {
    let g = triangulate(&sigma_graph(&normalize_factors(ifm)));
    build_junction_tree(&g).expect("triangulated graph is chordal")
}

/// Checks that every regime zero outside some clique of the triangulated
/// σ-graph is in `train`.
pub fn check_conditions(ifm: &IfmStructure, train: &RegimeSet, target: &RegimeVector) -> ConditionReport {
    report_for(&junction_tree_of(ifm), ifm, train, target)
}

pub(crate) fn report_for(
    tree: &JunctionTree,
    ifm: &IfmStructure,
    train: &RegimeSet,
    target: &RegimeVector,
) -> ConditionReport {
    let target_in_train = train.contains(target);
    let cliques: Vec<CliqueCondition> = tree
        .cliques
        .iter()
        .map(|c| {
            let need = sigma_zero_set(ifm.space(), c);
            CliqueCondition {
                clique: c.clone(),
                required: need.len(),
                missing: need.iter().filter(|r| !train.contains(r)).cloned().collect(),
            }
        })
        .collect();
    let passed = target_in_train || cliques.iter().all(|c| c.missing.is_empty());
    ConditionReport {
        passed,
        target_in_train,
        cliques,
        common_support: "assumed".into(),
    }
}
