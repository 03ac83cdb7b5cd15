use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::graph::SigmaGraph;
use super::space::{InterventionSpace, RegimeVector};
use crate::error::{Error, Result};

/// One factor `f_k(x_{S_k}; σ_{F_k})`: the random variables it touches and
/// the intervention variables indexing it. Both index lists are sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FactorSpec {
    vars: Vec<usize>,
    intvs: Vec<usize>,
}

impl FactorSpec {
    pub fn new(mut vars: Vec<usize>, mut intvs: Vec<usize>) -> Result<Self> {
        vars.sort_unstable();
        vars.dedup();
        intvs.sort_unstable();
        intvs.dedup();
        if vars.is_empty() {
            return Err(Error::InvalidStructure("factor with an empty variable scope".into()));
        }
        Ok(Self { vars, intvs })
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn intvs(&self) -> &[usize] {
        &self.intvs
    }

    fn intvs_subset_of(&self, other: &FactorSpec) -> bool {
        self.intvs.iter().all(|i| other.intvs.binary_search(i).is_ok())
    }
}

/// The postulated factorization `p(x; σ) ∝ ∏_k f_k(x_{S_k}; σ_{F_k})`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IfmStructure {
    var_names: Vec<String>,
    space: InterventionSpace,
    factors: Vec<FactorSpec>,
}

impl IfmStructure {
    pub fn new(var_names: Vec<String>, space: InterventionSpace, factors: Vec<FactorSpec>) -> Result<Self> {
        let m = var_names.len();
        if m == 0 {
            return Err(Error::InvalidStructure(
                "at least one random variable is required".into(),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for n in &var_names {
            if !seen.insert(n.as_str()) {
                return Err(Error::InvalidStructure(format!("duplicate variable name `{n}`")));
            }
        }
        if factors.is_empty() {
            return Err(Error::InvalidStructure("no factors".into()));
        }
        let d = space.dim();
        let mut var_used = vec![false; m];
        let mut intv_used = vec![false; d];
        for (k, f) in factors.iter().enumerate() {
            for &v in f.vars() {
                if v >= m {
                    return Err(Error::InvalidStructure(format!(
                        "factor {k} references variable index {v} (only {m} variables)"
                    )));
                }
                var_used[v] = true;
            }
            for &i in f.intvs() {
                if i >= d {
                    return Err(Error::InvalidStructure(format!(
                        "factor {k} references intervention index {i} (only {d} interventions)"
                    )));
                }
                intv_used[i] = true;
            }
        }
        if let Some(v) = var_used.iter().position(|u| !u) {
            return Err(Error::InvalidStructure(format!(
                "variable `{}` appears in no factor",
                var_names[v]
            )));
        }
        if let Some(i) = intv_used.iter().position(|u| !u) {
            return Err(Error::InvalidStructure(format!(
                "intervention `{}` appears in no factor",
                space.names()[i]
            )));
        }
        Ok(Self {
            var_names,
            space,
            factors,
        })
    }

    /// Variables named `x1..xm` and interventions from `space`, with factors
    /// given as `(vars, intvs)` index pairs.
    pub fn from_indices(m: usize, space: InterventionSpace, factors: &[(&[usize], &[usize])]) -> Result<Self> {
        let fs = factors
            .iter()
            .map(|(v, i)| FactorSpec::new(v.to_vec(), i.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Self::new((1..=m).map(|i| format!("x{i}")).collect(), space, fs)
    }

    pub fn num_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn space(&self) -> &InterventionSpace {
        &self.space
    }

    pub fn factors(&self) -> &[FactorSpec] {
        &self.factors
    }

    pub fn factor(&self, k: usize) -> &FactorSpec {
        &self.factors[k]
    }

    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    /// Number of distinct values of `σ_{F_k}`.
    pub fn factor_value_count(&self, k: usize) -> usize {
        self.factors[k]
            .intvs()
            .iter()
            .map(|&i| self.space.cardinality(i))
            .product()
    }

    /// Mixed-radix index of `σ_{F_k}` (last intervention fastest).
    pub fn factor_value_index(&self, k: usize, regime: &RegimeVector) -> usize {
        self.factors[k]
            .intvs()
            .iter()
            .fold(0, |acc, &i| acc * self.space.cardinality(i) + regime.levels()[i])
    }

    /// Inverse of [`Self::factor_value_index`].
    pub fn factor_value_levels(&self, k: usize, mut index: usize) -> Vec<usize> {
        let intvs = self.factors[k].intvs();
        let mut out = vec![0; intvs.len()];
        for (slot, &i) in intvs.iter().enumerate().rev() {
            let c = self.space.cardinality(i);
            out[slot] = index % c;
            index /= c;
        }
        out
    }

    /// Factor indices whose variable scope contains `var`.
    pub fn factors_touching(&self, var: usize) -> Vec<usize> {
        (0..self.factors.len())
            .filter(|&k| self.factors[k].vars().binary_search(&var).is_ok())
            .collect()
    }

    /// True when no factor's intervention scope is contained in another's.
    pub fn is_normalized(&self) -> bool {
        (0..self.factors.len()).all(|k| absorbing_factor(&self.factors, k).is_none())
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("structure serializes");
        let digest = Sha256::digest(&json);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Lowest-index factor that should absorb factor `k`: a strict superset of
/// its intervention scope, or an equal scope at a lower index.
fn absorbing_factor(factors: &[FactorSpec], k: usize) -> Option<usize> {
    let fk = &factors[k];
    (0..factors.len())
        .find(|&j| j != k && fk.intvs_subset_of(&factors[j]) && (factors[j].intvs.len() > fk.intvs.len() || j < k))
}

/// Merges every factor whose intervention scope is contained in another
/// factor's scope into the lowest-index such factor, repeating until no
/// containment remains.
pub fn normalize_factors(ifm: &IfmStructure) -> IfmStructure {
    let mut factors = ifm.factors.clone();
    while let Some((k, j)) = (0..factors.len()).find_map(|k| absorbing_factor(&factors, k).map(|j| (k, j))) {
        let absorbed = factors.remove(k);
        let j = if j > k { j - 1 } else { j };
        let target = &mut factors[j];
        let mut vars = target.vars.clone();
        vars.extend_from_slice(&absorbed.vars);
        let mut intvs = target.intvs.clone();
        intvs.extend_from_slice(&absorbed.intvs);
        *target = FactorSpec::new(vars, intvs).expect("union of non-empty scopes");
    }
    IfmStructure {
        var_names: ifm.var_names.clone(),
        space: ifm.space.clone(),
        factors,
    }
}

/// Edge `i - j` iff interventions `i` and `j` share a factor.
pub fn sigma_graph(ifm: &IfmStructure) -> SigmaGraph {
    let mut g = SigmaGraph::new(ifm.space.dim());
    for f in &ifm.factors {
        for (a, &i) in f.intvs.iter().enumerate() {
            for &j in &f.intvs[a + 1..] {
                g.add_edge(i, j);
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain3() -> IfmStructure {
        IfmStructure::from_indices(
            3,
            InterventionSpace::binary(3).unwrap(),
            &[(&[0, 1], &[0, 1]), (&[1, 2], &[1, 2])],
        )
        .unwrap()
    }

    #[test]
    fn subset_scope_is_absorbed() {
        let ifm = IfmStructure::from_indices(
            2,
            InterventionSpace::binary(2).unwrap(),
            &[(&[0], &[0]), (&[0, 1], &[0, 1])],
        )
        .unwrap();
        let n = normalize_factors(&ifm);
        assert_eq!(n.num_factors(), 1);
        assert_eq!(n.factor(0).vars(), &[0, 1]);
        assert_eq!(n.factor(0).intvs(), &[0, 1]);
        assert!(n.is_normalized());
    }

    #[test]
    fn chain_is_already_normalized() {
        let ifm = chain3();
        assert!(ifm.is_normalized());
        assert_eq!(normalize_factors(&ifm), ifm);
    }

    #[test]
    fn empty_scope_goes_to_first_nonempty() {
        let ifm = IfmStructure::from_indices(
            3,
            InterventionSpace::binary(2).unwrap(),
            &[(&[2], &[]), (&[0], &[0]), (&[1], &[1])],
        )
        .unwrap();
        let n = normalize_factors(&ifm);
        assert_eq!(n.num_factors(), 2);
        assert_eq!(n.factor(0).vars(), &[0, 2]);
        assert_eq!(n.factor(0).intvs(), &[0]);
        assert_eq!(n.factor(1).intvs(), &[1]);
    }

    #[test]
    fn equal_scopes_merge_into_earlier() {
        let ifm = IfmStructure::from_indices(
            3,
            InterventionSpace::binary(1).unwrap(),
            &[(&[0], &[0]), (&[1, 2], &[0])],
        )
        .unwrap();
        let n = normalize_factors(&ifm);
        assert_eq!(n.num_factors(), 1);
        assert_eq!(n.factor(0).vars(), &[0, 1, 2]);
    }

    #[test]
    fn sigma_graph_examples() {
        assert_eq!(sigma_graph(&chain3()).edges(), vec![(0, 1), (1, 2)]);

        let singles = IfmStructure::from_indices(
            3,
            InterventionSpace::binary(3).unwrap(),
            &[(&[0], &[0]), (&[1], &[1]), (&[2], &[2])],
        )
        .unwrap();
        assert_eq!(sigma_graph(&singles).edge_count(), 0);

        let tri = IfmStructure::from_indices(
            3,
            InterventionSpace::binary(3).unwrap(),
            &[(&[0, 1], &[0, 1]), (&[1, 2], &[1, 2]), (&[0, 2], &[0, 2])],
        )
        .unwrap();
        assert_eq!(sigma_graph(&tri).edges(), vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn validation_rejects_unused_intervention() {
        let r = IfmStructure::from_indices(2, InterventionSpace::binary(2).unwrap(), &[(&[0, 1], &[0])]);
        assert!(matches!(r, Err(Error::InvalidStructure(_))));
        let r = IfmStructure::from_indices(3, InterventionSpace::binary(1).unwrap(), &[(&[0, 1], &[0])]);
        assert!(r.is_err());
    }

    #[test]
    fn value_index_roundtrip() {
        let space = InterventionSpace::new(vec!["a".into(), "b".into()], vec![3, 2]).unwrap();
        let ifm = IfmStructure::from_indices(1, space, &[(&[0], &[0, 1])]).unwrap();
        assert_eq!(ifm.factor_value_count(0), 6);
        for idx in 0..6 {
            let lv = ifm.factor_value_levels(0, idx);
            let r = RegimeVector(lv);
            assert_eq!(ifm.factor_value_index(0, &r), idx);
        }
    }

    #[test]
    fn fingerprint_is_stable_and_sensitive() {
        let a = chain3();
        assert_eq!(a.fingerprint(), chain3().fingerprint());
        let b = normalize_factors(
            &IfmStructure::from_indices(
                3,
                InterventionSpace::binary(3).unwrap(),
                &[(&[0, 1, 2], &[0, 1]), (&[1, 2], &[1, 2])],
            )
            .unwrap(),
        );
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}
