use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::certificate::PrTransformation;
use super::conditions::{junction_tree_of, report_for};
use crate::error::{Error, Result};
use crate::model::{restrict_regime, IfmStructure, RegimeSet, RegimeVector};

/// One message `m_k = p(x; σ^{[D_k(⋆)]}) / p(x; σ^{[B_k(⋆)]})` sent from a
/// non-root hypervertex to its parent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageStep {
    pub clique: Vec<usize>,
    pub numerator: RegimeVector,
    pub denominator: RegimeVector,
}

/// Junction-tree identification: certificate plus the leaf-to-root message
/// schedule that produced it.
pub fn message_passing_identify(
    ifm: &IfmStructure,
    train: &RegimeSet,
    target: &RegimeVector,
) -> Result<(PrTransformation, Vec<MessageStep>)> {
    ifm.space().check(target)?;
    if let Some(cert) = PrTransformation::one_hot(train, target) {
        return Ok((cert, Vec::new()));
    }
    let tree = junction_tree_of(ifm);
    let report = report_for(&tree, ifm, train, target);
    if !report.passed {
        let missing: Vec<String> = report
            .cliques
            .iter()
            .flat_map(|c| c.missing.iter().map(|r| format!("({r})")))
            .collect();
        return Err(Error::ConditionsNotMet(format!(
            "training set lacks {}",
            missing.join(", ")
        )));
    }

    // exponent map of p(x; σ^{[D_k(⋆)]}) per hypervertex, children first
    let mut expo: Vec<BTreeMap<RegimeVector, f64>> = vec![BTreeMap::new(); tree.len()];
    let mut steps = Vec::new();
    for k in tree.postorder() {
        let mut e = BTreeMap::new();
        *e.entry(restrict_regime(target, &tree.cliques[k])).or_insert(0.0) += 1.0;
        for &c in &tree.children[k] {
            for (r, q) in std::mem::take(&mut expo[c]) {
                *e.entry(r).or_insert(0.0) += q;
            }
            *e.entry(restrict_regime(target, &tree.boundary[c])).or_insert(0.0) -= 1.0;
        }
        if tree.parent[k].is_some() {
            steps.push(MessageStep {
                clique: tree.cliques[k].clone(),
                numerator: restrict_regime(target, &tree.descendants[k]),
                denominator: restrict_regime(target, &tree.boundary[k]),
            });
        }
        expo[k] = e;
    }

    let mut exponents = vec![0.0; train.len()];
    for (r, q) in &expo[tree.root] {
        if *q == 0.0 {
            continue;
        }
        let pos = train
            .position(r)
            .ok_or_else(|| Error::ConditionsNotMet(format!("message references ({r}), absent from training")))?;
        exponents[pos] += q;
    }
    Ok((
        PrTransformation {
            target: target.clone(),
            train_regimes: train.clone(),
            exponents,
        },
        steps,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InterventionSpace;

    fn r(s: &str) -> RegimeVector {
        s.parse().unwrap()
    }

    #[test]
    fn chain_certificate() {
        let ifm = IfmStructure::from_indices(
            3,
            InterventionSpace::binary(3).unwrap(),
            &[(&[0, 1], &[0, 1]), (&[1, 2], &[1, 2])],
        )
        .unwrap();
        let train: RegimeSet = ["0,0,0", "0,1,0", "1,0,0", "1,1,0", "0,0,1", "0,1,1"]
            .iter()
            .map(|s| r(s))
            .collect();
        let (cert, steps) = message_passing_identify(&ifm, &train, &r("1,1,1")).unwrap();
        assert_eq!(cert.exponents, vec![0.0, -1.0, 0.0, 1.0, 0.0, 1.0]);
        assert_eq!(steps.len(), 1);
    }

    #[test]
    fn one_hot_when_target_in_train() {
        let ifm = IfmStructure::from_indices(1, InterventionSpace::binary(1).unwrap(), &[(&[0], &[0])]).unwrap();
        let train: RegimeSet = [r("0"), r("1")].into_iter().collect();
        let (cert, _) = message_passing_identify(&ifm, &train, &r("1")).unwrap();
        assert_eq!(cert.exponents, vec![0.0, 1.0]);
    }

    #[test]
    fn conditions_not_met() {
        let ifm = IfmStructure::from_indices(2, InterventionSpace::binary(2).unwrap(), &[(&[0, 1], &[0, 1])]).unwrap();
        let train: RegimeSet = [r("0,0"), r("1,0")].into_iter().collect();
        assert!(matches!(
            message_passing_identify(&ifm, &train, &r("1,1")),
            Err(Error::ConditionsNotMet(_))
        ));
    }
}
