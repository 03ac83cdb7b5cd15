use serde::{Deserialize, Serialize};

use super::algebraic::Unidentifiable;
use super::conditions::ConditionReport;
use super::message::MessageStep;
use crate::model::{RegimeSet, RegimeVector};

/// Exponents `q` such that `∏_i p(x; σ^i)^{q_i} ∝ p(x; σ*)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrTransformation {
    pub target: RegimeVector,
    pub train_regimes: RegimeSet,
    pub exponents: Vec<f64>,
}

impl PrTransformation {
    pub fn one_hot(train: &RegimeSet, target: &RegimeVector) -> Option<Self> {
        let pos = train.position(target)?;
        let mut exponents = vec![0.0; train.len()];
        exponents[pos] = 1.0;
        Some(Self {
            target: target.clone(),
            train_regimes: train.clone(),
            exponents,
        })
    }

    /// Nonzero exponents paired with their regimes, in train order.
    pub fn support(&self, tol: f64) -> Vec<(&RegimeVector, f64)> {
        self.train_regimes
            .iter()
            .zip(&self.exponents)
            .filter(|(_, q)| q.abs() > tol)
            .map(|(r, &q)| (r, q))
            .collect()
    }

    /// `Σ_i q_i · values[i]`, e.g. with `values[i] = log p(x; σ^i)`.
    pub fn combine(&self, values: &[f64]) -> f64 {
        self.exponents.iter().zip(values).map(|(q, v)| q * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    JunctionTree,
    Algebraic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RoutePreference {
    /// Junction tree when its conditions hold, algebraic otherwise.
    #[default]
    Auto,
    JunctionTree,
    Algebraic,
}

/// Answer to an identification query, serialized as the certificate JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Identification {
    pub identifiable: bool,
    pub target: RegimeVector,
    pub train_regimes: RegimeSet,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponents: Option<Vec<f64>>,
    pub route: Route,
    pub conditions: ConditionReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solution_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unidentifiable: Option<Unidentifiable>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub messages: Vec<MessageStep>,
}

impl Identification {
    pub fn certificate(&self) -> Option<PrTransformation> {
        self.exponents.as_ref().map(|q| PrTransformation {
            target: self.target.clone(),
            train_regimes: self.train_regimes.clone(),
            exponents: q.clone(),
        })
    }
}
