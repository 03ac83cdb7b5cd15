//! Identification of unseen regimes: decomposability, junction trees and
//! message passing, and the general linear-system route. Both routes emit
//! exponent-vector certificates checked by [`verify_pr`].

mod algebraic;
mod certificate;
mod chordal;
mod conditions;
mod jtree;
mod message;

pub use algebraic::{
    build_system, greedy_prune, max_violation, solve_pr, verify_pr, LinearSystem, Solution, Symbol, SymbolIndex,
    Unidentifiable, RESIDUAL_TOL,
};
pub use certificate::{Identification, PrTransformation, Route, RoutePreference};
pub use chordal::{is_decomposable, maximal_cliques, mcs_order, triangulate};
pub use conditions::{check_conditions, CliqueCondition, ConditionReport};
pub use jtree::{build_junction_tree, JunctionTree, TreeEdge};
pub use message::{message_passing_identify, MessageStep};

use crate::error::{Error, Result};
use crate::model::{IfmStructure, RegimeSet, RegimeVector};

/// Answers whether `target` is identifiable from `train`.
///
/// An unidentifiable target is an `Ok` answer with `identifiable: false`.
pub fn identify(
    ifm: &IfmStructure,
    train: &RegimeSet,
    target: &RegimeVector,
    route: RoutePreference,
) -> Result<Identification> {
    let space = ifm.space();
    space.check(target)?;
    for r in train.iter() {
        space.check(r)?;
    }
    if train.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    let conditions = check_conditions(ifm, train, target);

    if route != RoutePreference::Algebraic && conditions.passed {
        let (cert, messages) = message_passing_identify(ifm, train, target)?;
        return Ok(Identification {
            identifiable: true,
            target: target.clone(),
            train_regimes: train.clone(),
            exponents: Some(cert.exponents),
            route: Route::JunctionTree,
            conditions,
            solution_dim: None,
            unidentifiable: None,
            messages,
        });
    }
    if route == RoutePreference::JunctionTree {
        return Err(Error::ConditionsNotMet(
            "junction-tree conditions fail; try the algebraic route".into(),
        ));
    }

    let system = build_system(ifm, train, target);
    let base = Identification {
        identifiable: false,
        target: target.clone(),
        train_regimes: train.clone(),
        exponents: None,
        route: Route::Algebraic,
        conditions,
        solution_dim: None,
        unidentifiable: None,
        messages: Vec::new(),
    };
    Ok(match solve_pr(&system) {
        Ok(sol) => Identification {
            identifiable: true,
            exponents: Some(sol.certificate.exponents),
            solution_dim: Some(sol.solution_dim),
            ..base
        },
        Err(why) => Identification {
            unidentifiable: Some(why),
            ..base
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InterventionSpace;

    fn r(s: &str) -> RegimeVector {
        s.parse().unwrap()
    }

    #[test]
    fn routes_agree_on_chain() {
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
        let jt = identify(&ifm, &train, &r("1,1,1"), RoutePreference::JunctionTree).unwrap();
        let al = identify(&ifm, &train, &r("1,1,1"), RoutePreference::Algebraic).unwrap();
        assert_eq!(jt.route, Route::JunctionTree);
        assert_eq!(al.route, Route::Algebraic);
        let (a, b) = (jt.exponents.unwrap(), al.exponents.unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn edgeless_certificate_shape() {
        let ifm = IfmStructure::from_indices(
            3,
            InterventionSpace::binary(3).unwrap(),
            &[(&[0], &[0]), (&[1], &[1]), (&[2], &[2])],
        )
        .unwrap();
        let train: RegimeSet = ["0,0,0", "1,0,0", "0,1,0", "0,0,1"].iter().map(|s| r(s)).collect();
        let id = identify(&ifm, &train, &r("1,0,1"), RoutePreference::Auto).unwrap();
        let q = id.exponents.unwrap();
        assert_eq!(q, vec![-1.0, 1.0, 0.0, 1.0]);
        assert!(q.iter().all(|v| [-1.0, 0.0, 1.0].contains(v)));
        assert!(q.iter().filter(|v| **v != 0.0).count() < 2 * 2);
    }
}
