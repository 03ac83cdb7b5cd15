use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The finite space of intervention variables. Level 0 of every variable is
/// the baseline (unperturbed) setting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterventionSpace {
    names: Vec<String>,
    cardinalities: Vec<usize>,
}

impl InterventionSpace {
    pub fn new(names: Vec<String>, cardinalities: Vec<usize>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidStructure(
                "at least one intervention variable is required".into(),
            ));
        }
        if names.len() != cardinalities.len() {
            return Err(Error::InvalidStructure(format!(
                "{} intervention names but {} cardinalities",
                names.len(),
                cardinalities.len()
            )));
        }
        if let Some(i) = cardinalities.iter().position(|&c| c < 2) {
            return Err(Error::InvalidStructure(format!(
                "intervention `{}` has cardinality {} (must be >= 2)",
                names[i], cardinalities[i]
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(Error::InvalidStructure(format!("duplicate intervention name `{n}`")));
            }
        }
        Ok(Self { names, cardinalities })
    }

    /// `d` binary interventions named `s1..sd`.
    pub fn binary(d: usize) -> Result<Self> {
        Self::new((1..=d).map(|i| format!("s{i}")).collect(), vec![2; d])
    }

    pub fn dim(&self) -> usize {
        self.cardinalities.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cardinalities
    }

    pub fn cardinality(&self, i: usize) -> usize {
        self.cardinalities[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn baseline(&self) -> RegimeVector {
        RegimeVector(vec![0; self.dim()])
    }

    /// Total number of regimes, saturating at `u128::MAX`.
    pub fn size(&self) -> u128 {
        self.cardinalities
            .iter()
            .fold(1u128, |acc, &c| acc.saturating_mul(c as u128))
    }

    pub fn check(&self, regime: &RegimeVector) -> Result<()> {
        if regime.len() != self.dim() {
            return Err(Error::InvalidRegime {
                regime: regime.to_string(),
                reason: format!("expected {} levels, got {}", self.dim(), regime.len()),
            });
        }
        for (i, (&l, &c)) in regime.0.iter().zip(&self.cardinalities).enumerate() {
            if l >= c {
                return Err(Error::InvalidRegime {
                    regime: regime.to_string(),
                    reason: format!("level {l} of `{}` exceeds cardinality {c}", self.names[i]),
                });
            }
        }
        Ok(())
    }

    /// All regimes in lexicographic order.
    pub fn all_regimes(&self) -> RegimeSet {
        sigma_zero_set(self, &(0..self.dim()).collect::<Vec<_>>())
    }
}

/// A complete assignment of levels to every intervention variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegimeVector(pub Vec<usize>);

impl RegimeVector {
    pub fn new(levels: Vec<usize>) -> Self {
        Self(levels)
    }

    pub fn levels(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_baseline(&self) -> bool {
        self.0.iter().all(|&l| l == 0)
    }

    /// Indices with a non-baseline level.
    pub fn active(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &l)| l != 0)
            .map(|(i, _)| i)
            .collect()
    }

    /// Levels at the given indices.
    pub fn project(&self, idx: &[usize]) -> Vec<usize> {
        idx.iter().map(|&i| self.0[i]).collect()
    }
}

impl fmt::Display for RegimeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|l| l.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for RegimeVector {
    type Err = Error;

    /// Parses the comma-separated CLI syntax, e.g. `1,0,1`.
    fn from_str(s: &str) -> Result<Self> {
        let levels = s
            .split(',')
            .map(|p| {
                p.trim().parse::<usize>().map_err(|_| Error::InvalidRegime {
                    regime: s.to_string(),
                    reason: format!("`{p}` is not a non-negative integer"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self(levels))
    }
}

/// Insertion-ordered set of regimes. Exponent vectors index into this order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RegimeSet {
    regimes: Vec<RegimeVector>,
    index: HashMap<RegimeVector, usize>,
}

impl RegimeSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns false (and leaves the set unchanged) on a duplicate.
    pub fn insert(&mut self, r: RegimeVector) -> bool {
        if self.index.contains_key(&r) {
            return false;
        }
        self.index.insert(r.clone(), self.regimes.len());
        self.regimes.push(r);
        true
    }

    pub fn contains(&self, r: &RegimeVector) -> bool {
        self.index.contains_key(r)
    }

    pub fn position(&self, r: &RegimeVector) -> Option<usize> {
        self.index.get(r).copied()
    }

    pub fn len(&self) -> usize {
        self.regimes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regimes.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, RegimeVector> {
        self.regimes.iter()
    }

    pub fn as_slice(&self) -> &[RegimeVector] {
        &self.regimes
    }

    pub fn get(&self, i: usize) -> &RegimeVector {
        &self.regimes[i]
    }

    /// Copy of the set without the element at `i`, order otherwise kept.
    pub fn without(&self, i: usize) -> RegimeSet {
        self.regimes
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, r)| r.clone())
            .collect()
    }
}

impl FromIterator<RegimeVector> for RegimeSet {
    fn from_iter<T: IntoIterator<Item = RegimeVector>>(iter: T) -> Self {
        let mut s = RegimeSet::new();
        for r in iter {
            s.insert(r);
        }
        s
    }
}

impl<'a> IntoIterator for &'a RegimeSet {
    type Item = &'a RegimeVector;
    type IntoIter = std::slice::Iter<'a, RegimeVector>;

    fn into_iter(self) -> Self::IntoIter {
        self.regimes.iter()
    }
}

impl Serialize for RegimeSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.regimes.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RegimeSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<RegimeVector>::deserialize(d)?;
        let n = v.len();
        let set: RegimeSet = v.into_iter().collect();
        if set.len() != n {
            return Err(serde::de::Error::custom("duplicate regime in regime set"));
        }
        Ok(set)
    }
}

/// All regimes that are zero outside `z`, enumerating every level
/// combination over `z` in lexicographic order.
pub fn sigma_zero_set(space: &InterventionSpace, z: &[usize]) -> RegimeSet {
    let mut z: Vec<usize> = z.to_vec();
    z.sort_unstable();
    z.dedup();
    let mut out = RegimeSet::new();
    let mut levels = vec![0usize; space.dim()];
    loop {
        out.insert(RegimeVector(levels.clone()));
        // odometer over z, last index fastest
        let mut carry = true;
        for &i in z.iter().rev() {
            levels[i] += 1;
            if levels[i] < space.cardinality(i) {
                carry = false;
                break;
            }
            levels[i] = 0;
        }
        if carry {
            break;
        }
    }
    out
}

/// The regime equal to `target` on `z` and baseline elsewhere.
pub fn restrict_regime(target: &RegimeVector, z: &[usize]) -> RegimeVector {
    let mut levels = vec![0; target.len()];
    for &i in z {
        levels[i] = target.0[i];
    }
    RegimeVector(levels)
}
