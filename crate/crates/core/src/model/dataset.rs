use super::space::RegimeVector;
use crate::error::{Error, Result};

/// Samples of `X` (and optionally `Y`) collected under one regime.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeDataset {
    regime: RegimeVector,
    x: Vec<Vec<f64>>,
    y: Option<Vec<f64>>,
}

impl RegimeDataset {
    pub fn new(regime: RegimeVector, x: Vec<Vec<f64>>, y: Option<Vec<f64>>) -> Result<Self> {
        let bad = |reason: String| Error::InvalidDataset {
            regime: regime.to_string(),
            reason,
        };
        if x.is_empty() {
            return Err(bad("no rows".into()));
        }
        let m = x[0].len();
        for (j, row) in x.iter().enumerate() {
            if row.len() != m {
                return Err(bad(format!("row {j} has {} columns, expected {m}", row.len())));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(bad(format!("row {j} has a non-finite entry")));
            }
        }
        if let Some(y) = &y {
            if y.len() != x.len() {
                return Err(bad(format!("{} outcomes for {} rows", y.len(), x.len())));
            }
            if y.iter().any(|v| !v.is_finite()) {
                return Err(bad("non-finite outcome".into()));
            }
        }
        Ok(Self { regime, x, y })
    }

    pub fn regime(&self) -> &RegimeVector {
        &self.regime
    }

    pub fn x(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn y(&self) -> Option<&[f64]> {
        self.y.as_deref()
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn num_vars(&self) -> usize {
        self.x[0].len()
    }

    pub fn with_y(&self, y: Vec<f64>) -> Result<Self> {
        Self::new(self.regime.clone(), self.x.clone(), Some(y))
    }

    /// Subset of rows, in the given order. `None` when `rows` is empty.
    pub fn select(&self, rows: &[usize]) -> Option<Self> {
        if rows.is_empty() {
            return None;
        }
        Some(Self {
            regime: self.regime.clone(),
            x: rows.iter().map(|&j| self.x[j].clone()).collect(),
            y: self.y.as_ref().map(|y| rows.iter().map(|&j| y[j]).collect()),
        })
    }
}
