use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::RegimeDataset;

pub const DEFAULT_BINS: usize = 20;

/// Per-variable uniform discretization.
///
/// Bins are half-open `[e_i, e_{i+1})` except the last, which is closed.
/// Values outside the range clamp to the outer bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    edges: Vec<Vec<f64>>,
}

impl Grid {
    /// Uniform bins over `ranges[i] = (lo, hi)` with `lo < hi`.
    pub fn uniform(ranges: &[(f64, f64)], bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidArgument("bin count must be positive".into()));
        }
        let edges = ranges
            .iter()
            .enumerate()
            .map(|(i, &(lo, hi))| {
                if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
                    return Err(Error::DegenerateVariable(format!("#{}", i + 1)));
                }
                Ok((0..=bins)
                    .map(|b| {
                        if b == bins {
                            hi
                        } else {
                            lo + (hi - lo) * b as f64 / bins as f64
                        }
                    })
                    .collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Ok(Self { edges })
    }

    /// Edge lists given explicitly; each must be strictly increasing with at
    /// least two entries.
    pub fn from_edges(edges: Vec<Vec<f64>>) -> Result<Self> {
        for (i, e) in edges.iter().enumerate() {
            if e.len() < 2 || e.iter().any(|v| !v.is_finite()) || e.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::ModelFormat(format!(
                    "grid edges of variable #{} are not strictly increasing",
                    i + 1
                )));
            }
        }
        Ok(Self { edges })
    }

    pub fn num_vars(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self, var: usize) -> &[f64] {
        &self.edges[var]
    }

    pub fn all_edges(&self) -> &[Vec<f64>] {
        &self.edges
    }

    pub fn bins(&self, var: usize) -> usize {
        self.edges[var].len() - 1
    }

    pub fn center(&self, var: usize, bin: usize) -> f64 {
        let e = &self.edges[var];
        0.5 * (e[bin] + e[bin + 1])
    }

    pub fn centers(&self, var: usize) -> Vec<f64> {
        (0..self.bins(var)).map(|b| self.center(var, b)).collect()
    }

    pub fn range(&self, var: usize) -> (f64, f64) {
        let e = &self.edges[var];
        (e[0], e[e.len() - 1])
    }

    pub fn bin_of(&self, var: usize, value: f64) -> usize {
        let e = &self.edges[var];
        let nb = e.len() - 1;
        e[1..nb].partition_point(|&edge| edge <= value).min(nb - 1)
    }

    pub fn bin_row(&self, row: &[f64]) -> Vec<usize> {
        row.iter().enumerate().map(|(i, &v)| self.bin_of(i, v)).collect()
    }

    /// Total number of grid cells.
    pub fn num_cells(&self) -> u128 {
        (0..self.num_vars()).map(|i| self.bins(i) as u128).product()
    }
}

/// Uniform bins over the pooled range of each variable.
pub fn discretize(datasets: &[RegimeDataset], var_names: &[String], bins: usize) -> Result<Grid> {
    let first = datasets
        .first()
        .ok_or_else(|| Error::InsufficientData("no datasets to discretize".into()))?;
    let m = first.num_vars();
    if m != var_names.len() {
        return Err(Error::LengthMismatch(format!(
            "datasets have {m} columns, structure has {} variables",
            var_names.len()
        )));
    }
    let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); m];
    for d in datasets {
        if d.num_vars() != m {
            return Err(Error::LengthMismatch(
                "datasets disagree on the number of columns".into(),
            ));
        }
        for row in d.x() {
            for (r, &v) in ranges.iter_mut().zip(row) {
                r.0 = r.0.min(v);
                r.1 = r.1.max(v);
            }
        }
    }
    if let Some(i) = ranges.iter().position(|(lo, hi)| lo >= hi) {
        return Err(Error::DegenerateVariable(var_names[i].clone()));
    }
    Grid::uniform(&ranges, bins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RegimeVector;

    #[test]
    fn unit_range_edges() {
        let g = Grid::uniform(&[(0.0, 1.0)], 20).unwrap();
        let e = g.edges(0);
        assert_eq!(e.len(), 21);
        for (b, v) in e.iter().enumerate() {
            assert!((v - 0.05 * b as f64).abs() < 1e-12);
        }
        assert_eq!(g.bin_of(0, 0.0), 0);
        assert_eq!(g.bin_of(0, 0.05), 1);
        assert_eq!(g.bin_of(0, 1.0), 19);
        assert_eq!(g.bin_of(0, 7.0), 19);
        assert_eq!(g.bin_of(0, -7.0), 0);
    }

    #[test]
    fn pooled_range_width() {
        let a = RegimeDataset::new(RegimeVector(vec![0]), vec![vec![-2.0], vec![0.0]], None).unwrap();
        let b = RegimeDataset::new(RegimeVector(vec![1]), vec![vec![3.0]], None).unwrap();
        let g = discretize(&[a, b], &["x".into()], 20).unwrap();
        let e = g.edges(0);
        assert!((e[1] - e[0] - 0.25).abs() < 1e-12);
        assert_eq!(g.range(0), (-2.0, 3.0));
    }

    #[test]
    fn single_point_is_degenerate() {
        let a = RegimeDataset::new(RegimeVector(vec![0]), vec![vec![1.0]], None).unwrap();
        assert!(matches!(
            discretize(&[a], &["x".into()], 20),
            Err(Error::DegenerateVariable(_))
        ));
    }
}
