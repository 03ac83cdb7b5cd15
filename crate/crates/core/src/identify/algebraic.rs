use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::certificate::PrTransformation;
use crate::linalg::{min_norm_least_squares, Matrix};
use crate::model::{normalize_factors, IfmStructure, RegimeSet, RegimeVector};

/// Residual tolerance for consistency and verification.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// A monomial symbol: factor `k` evaluated at `σ_{F_k} = value`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Symbol {
    pub factor: usize,
    pub value: Vec<usize>,
}

/// Symbols for the values of each `σ_{F_k}` occurring in train ∪ {target},
/// ordered by factor and then by mixed-radix value index.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolIndex {
    entries: Vec<Symbol>,
    lookup: HashMap<(usize, usize), usize>,
}

impl SymbolIndex {
    fn build<'a>(ifm: &IfmStructure, regimes: impl Iterator<Item = &'a RegimeVector> + Clone) -> Self {
        let mut entries = Vec::new();
        let mut lookup = HashMap::new();
        for k in 0..ifm.num_factors() {
            let mut vals: Vec<usize> = regimes.clone().map(|r| ifm.factor_value_index(k, r)).collect();
            vals.sort_unstable();
            vals.dedup();
            for v in vals {
                lookup.insert((k, v), entries.len());
                entries.push(Symbol {
                    factor: k,
                    value: ifm.factor_value_levels(k, v),
                });
            }
        }
        Self { entries, lookup }
    }

    pub fn entries(&self) -> &[Symbol] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Row positions selected by `regime`, one per factor.
    pub fn rows_of(&self, ifm: &IfmStructure, regime: &RegimeVector) -> Vec<usize> {
        (0..ifm.num_factors())
            .filter_map(|k| self.lookup.get(&(k, ifm.factor_value_index(k, regime))).copied())
            .collect()
    }
}

/// `A q = b` with one row per symbol and one column per training regime.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub ifm: IfmStructure,
    pub symbols: SymbolIndex,
    pub a: Matrix,
    pub b: Vec<f64>,
    pub train: RegimeSet,
    pub target: RegimeVector,
}

impl LinearSystem {
    pub fn residual(&self, q: &[f64]) -> Vec<f64> {
        self.a.mul_vec(q).iter().zip(&self.b).map(|(x, y)| x - y).collect()
    }
}

/// Builds the constraint system over the normalized factorization.
pub fn build_system(ifm: &IfmStructure, train: &RegimeSet, target: &RegimeVector) -> LinearSystem {
    let ifm = normalize_factors(ifm);
    let symbols = SymbolIndex::build(&ifm, train.iter().chain(std::iter::once(target)));
    let mut a = Matrix::zeros(symbols.len(), train.len());
    for (i, r) in train.iter().enumerate() {
        for row in symbols.rows_of(&ifm, r) {
            a.set(row, i, 1.0);
        }
    }
    let mut b = vec![0.0; symbols.len()];
    for row in symbols.rows_of(&ifm, target) {
        b[row] = 1.0;
    }
    LinearSystem {
        ifm,
        symbols,
        a,
        b,
        train: train.clone(),
        target: target.clone(),
    }
}

/// Why a system has no solution: the first constraint left violated by the
/// least-squares fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unidentifiable {
    pub row: usize,
    pub factor: usize,
    pub value: Vec<usize>,
    pub residual: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub certificate: PrTransformation,
    pub rank: usize,
    /// Dimension of the solution space.
    pub solution_dim: usize,
}

/// Minimum-norm solution of the system, or the first violated constraint.
pub fn solve_pr(system: &LinearSystem) -> Result<Solution, Unidentifiable> {
    let t = system.train.len();
    let ls = min_norm_least_squares(&system.a, &system.b);
    let residual = system.residual(&ls.solution);
    if let Some(row) = residual.iter().position(|r| r.abs() > RESIDUAL_TOL) {
        let sym = &system.symbols.entries()[row];
        return Err(Unidentifiable {
            row,
            factor: sym.factor,
            value: sym.value.clone(),
            residual: residual[row],
            rank: ls.rank,
        });
    }
    let certificate = PrTransformation::one_hot(&system.train, &system.target).unwrap_or(PrTransformation {
        target: system.target.clone(),
        train_regimes: system.train.clone(),
        exponents: ls.solution,
    });
    Ok(Solution {
        certificate,
        rank: ls.rank,
        solution_dim: t - ls.rank,
    })
}

/// Largest constraint violation of a certificate.
pub fn max_violation(ifm: &IfmStructure, cert: &PrTransformation) -> f64 {
    if cert.exponents.len() != cert.train_regimes.len() || cert.exponents.iter().any(|q| !q.is_finite()) {
        return f64::INFINITY;
    }
    let sys = build_system(ifm, &cert.train_regimes, &cert.target);
    sys.residual(&cert.exponents).iter().fold(0.0, |m, r| m.max(r.abs()))
}

/// True iff the certificate satisfies every constraint within tolerance.
pub fn verify_pr(ifm: &IfmStructure, cert: &PrTransformation) -> bool {
    max_violation(ifm, cert) <= RESIDUAL_TOL
}

/// Drops training regimes one at a time, in order, whenever the system stays
/// consistent without them. Returns the reduced set, or `None` if the full
/// set is already inconsistent.
pub fn greedy_prune(ifm: &IfmStructure, train: &RegimeSet, target: &RegimeVector) -> Option<RegimeSet> {
    solve_pr(&build_system(ifm, train, target)).ok()?;
    let mut kept = train.clone();
    let mut i = 0;
    while i < kept.len() {
        let candidate = kept.without(i);
        if !candidate.is_empty() && solve_pr(&build_system(ifm, &candidate, target)).is_ok() {
            kept = candidate;
        } else {
            i += 1;
        }
    }
    Some(kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InterventionSpace;

    fn r(s: &str) -> RegimeVector {
        s.parse().unwrap()
    }

    fn triangle() -> IfmStructure {
        IfmStructure::from_indices(
            3,
            InterventionSpace::binary(3).unwrap(),
            &[(&[0, 1], &[0, 1]), (&[1, 2], &[1, 2]), (&[0, 2], &[0, 2])],
        )
        .unwrap()
    }

    fn fig3_train() -> RegimeSet {
        ["0,0,0", "0,1,0", "1,0,0", "1,1,0", "0,0,1", "0,1,1", "1,0,1"]
            .iter()
            .map(|s| r(s))
            .collect()
    }

    #[test]
    fn fig3_system_shape_and_rows() {
        let sys = build_system(&triangle(), &fig3_train(), &r("1,1,1"));
        assert_eq!((sys.a.rows(), sys.a.cols()), (12, 7));
        // q1 + q5 = 0
        let row: Vec<f64> = sys.a.row(0).to_vec();
        assert_eq!(row, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(sys.b[0], 0.0);
        // q7 = 1
        assert!((0..12).any(|i| sys.a.row(i) == [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0] && sys.b[i] == 1.0));
        for c in 0..7 {
            let ones = (0..12).filter(|&i| sys.a.get(i, c) == 1.0).count();
            assert_eq!(ones, 3);
        }
    }

    #[test]
    fn fig3_solution_unique() {
        let sys = build_system(&triangle(), &fig3_train(), &r("1,1,1"));
        let sol = solve_pr(&sys).unwrap();
        assert_eq!(sol.solution_dim, 0);
        let expected = [1.0, -1.0, -1.0, 1.0, -1.0, 1.0, 1.0];
        for (q, e) in sol.certificate.exponents.iter().zip(expected) {
            assert!((q - e).abs() < 1e-9);
        }
        assert!(verify_pr(&triangle(), &sol.certificate));
    }

    #[test]
    fn perturbed_certificate_fails() {
        let sys = build_system(&triangle(), &fig3_train(), &r("1,1,1"));
        let mut cert = solve_pr(&sys).unwrap().certificate;
        cert.exponents[0] += 0.5;
        assert!(!verify_pr(&triangle(), &cert));
    }

    #[test]
    fn missing_value_row_is_infeasible() {
        let ifm = IfmStructure::from_indices(1, InterventionSpace::binary(1).unwrap(), &[(&[0], &[0])]).unwrap();
        let train: RegimeSet = [r("0")].into_iter().collect();
        let sys = build_system(&ifm, &train, &r("1"));
        assert_eq!(sys.a.row(1), [0.0]);
        assert_eq!(sys.b[1], 1.0);
        let err = solve_pr(&sys).unwrap_err();
        assert_eq!(err.row, 1);
    }

    #[test]
    fn target_in_train_one_hot() {
        let sys = build_system(&triangle(), &fig3_train(), &r("1,1,0"));
        let sol = solve_pr(&sys).unwrap();
        assert_eq!(sol.certificate.exponents, vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn pruning_keeps_consistency() {
        let ifm = IfmStructure::from_indices(
            3,
            InterventionSpace::binary(3).unwrap(),
            &[(&[0], &[0]), (&[1], &[1]), (&[2], &[2])],
        )
        .unwrap();
        let mut train = crate::model::sigma_zero_set(ifm.space(), &[0, 1, 2]);
        train = train.without(train.position(&r("1,1,1")).unwrap());
        let kept = greedy_prune(&ifm, &train, &r("1,1,1")).unwrap();
        assert!(kept.len() < train.len());
        assert!(solve_pr(&build_system(&ifm, &kept, &r("1,1,1"))).is_ok());
    }
}
