//! File formats: graph spec JSON, regime lists, dataset manifests and CSVs.
//!
//! Graph spec:
//!
//! ```json
//! {
//!   "variables": ["x1", "x2", "x3"],
//!   "interventions": [{"name": "s1", "cardinality": 2}, ...],
//!   "factors": [{"variables": ["x1", "x2"], "interventions": ["s1", "s2"]}, ...]
//! }
//! ```
//!
//! A manifest maps CSV paths (relative to the manifest) to level vectors:
//! `{"base.csv": [0, 0, 0], "s1.csv": [1, 0, 0]}`. Each CSV has a header row
//! with every variable name, in any order, plus an optional `y` column.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::dataset::RegimeDataset;
use super::space::{InterventionSpace, RegimeSet, RegimeVector};
use super::structure::{FactorSpec, IfmStructure};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterventionDecl {
    pub name: String,
    pub cardinality: usize,
    /// Optional explicit baseline level; only 0 is accepted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<usize>,
    /// Optional display labels, one per level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorDecl {
    pub variables: Vec<String>,
    #[serde(default)]
    pub interventions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub variables: Vec<String>,
    pub interventions: Vec<InterventionDecl>,
    pub factors: Vec<FactorDecl>,
}

impl GraphSpec {
    pub fn to_structure(&self) -> Result<IfmStructure> {
        for decl in &self.interventions {
            if let Some(b) = decl.baseline {
                if b != 0 {
                    return Err(Error::InvalidStructure(format!(
                        "intervention `{}` declares baseline level {b}; level 0 is always the baseline",
                        decl.name
                    )));
                }
            }
            if let Some(levels) = &decl.levels {
                if levels.len() != decl.cardinality {
                    return Err(Error::InvalidStructure(format!(
                        "intervention `{}` has {} level labels for cardinality {}",
                        decl.name,
                        levels.len(),
                        decl.cardinality
                    )));
                }
            }
        }
        let space = InterventionSpace::new(
            self.interventions.iter().map(|d| d.name.clone()).collect(),
            self.interventions.iter().map(|d| d.cardinality).collect(),
        )?;
        let var_index: HashMap<&str, usize> = self
            .variables
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        let factors = self
            .factors
            .iter()
            .enumerate()
            .map(|(k, f)| {
                let vars = f
                    .variables
                    .iter()
                    .map(|n| {
                        var_index.get(n.as_str()).copied().ok_or_else(|| {
                            Error::InvalidStructure(format!("factor {k} references unknown variable `{n}`"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let intvs = f
                    .interventions
                    .iter()
                    .map(|n| {
                        space.index_of(n).ok_or_else(|| {
                            Error::InvalidStructure(format!("factor {k} references unknown intervention `{n}`"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                FactorSpec::new(vars, intvs)
            })
            .collect::<Result<Vec<_>>>()?;
        IfmStructure::new(self.variables.clone(), space, factors)
    }

    pub fn from_structure(ifm: &IfmStructure) -> Self {
        let space = ifm.space();
        Self {
            variables: ifm.var_names().to_vec(),
            interventions: space
                .names()
                .iter()
                .zip(space.cardinalities())
                .map(|(n, &c)| InterventionDecl {
                    name: n.clone(),
                    cardinality: c,
                    baseline: None,
                    levels: None,
                })
                .collect(),
            factors: ifm
                .factors()
                .iter()
                .map(|f| FactorDecl {
                    variables: f.vars().iter().map(|&v| ifm.var_names()[v].clone()).collect(),
                    interventions: f.intvs().iter().map(|&i| space.names()[i].clone()).collect(),
                })
                .collect(),
        }
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_graph(path: &Path) -> Result<IfmStructure> {
    read_json::<GraphSpec>(path)?.to_structure()
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RegimeListFile {
    Plain(Vec<RegimeVector>),
    Wrapped { regimes: Vec<RegimeVector> },
}

/// Reads a regime list: either `[[0,0,0], ...]` or `{"regimes": [...]}`.
pub fn load_regimes(path: &Path, space: &InterventionSpace) -> Result<RegimeSet> {
    let list = match read_json::<RegimeListFile>(path)? {
        RegimeListFile::Plain(v) | RegimeListFile::Wrapped { regimes: v } => v,
    };
    let mut set = RegimeSet::new();
    for r in list {
        space.check(&r)?;
        if !set.insert(r.clone()) {
            return Err(Error::InvalidRegime {
                regime: r.to_string(),
                reason: "listed twice".into(),
            });
        }
    }
    Ok(set)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: PathBuf,
    pub regime: RegimeVector,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ManifestFile {
    Explicit { datasets: Vec<ManifestEntry> },
    // document order is kept (serde_json `preserve_order`)
    Mapping(serde_json::Map<String, serde_json::Value>),
}

/// Parses a manifest, resolving file paths against the manifest directory.
pub fn load_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let entries = match read_json::<ManifestFile>(path)? {
        ManifestFile::Explicit { datasets } => datasets,
        ManifestFile::Mapping(m) => m
            .into_iter()
            .map(|(file, regime)| {
                Ok(ManifestEntry {
                    file: file.into(),
                    regime: serde_json::from_value(regime)?,
                })
            })
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(entries
        .into_iter()
        .map(|e| ManifestEntry {
            file: if e.file.is_absolute() {
                e.file
            } else {
                base.join(e.file)
            },
            regime: e.regime,
        })
        .collect())
}

/// Reads one regime CSV, reordering columns to the structure's variable
/// order. The `y` column, when present, becomes the outcome.
pub fn load_csv(path: &Path, ifm: &IfmStructure, regime: RegimeVector) -> Result<RegimeDataset> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::InvalidDataset {
            regime: regime.to_string(),
            reason: format!("{}: {other:?}", path.display()),
        },
    })?;
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let bad = |reason: String| Error::InvalidDataset {
        regime: regime.to_string(),
        reason: format!("{}: {reason}", path.display()),
    };
    let cols = ifm
        .var_names()
        .iter()
        .map(|n| {
            headers
                .iter()
                .position(|h| h == n)
                .ok_or_else(|| bad(format!("missing column `{n}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let ycol = headers.iter().position(|h| h == "y");
    let mut x = Vec::new();
    let mut y = ycol.map(|_| Vec::new());
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse = |c: usize| -> Result<f64> {
            rec.get(c)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| bad(format!("row {}: column {} is not a number", line + 1, c + 1)))
        };
        x.push(cols.iter().map(|&c| parse(c)).collect::<Result<Vec<_>>>()?);
        if let (Some(c), Some(ys)) = (ycol, y.as_mut()) {
            ys.push(parse(c)?);
        }
    }
    RegimeDataset::new(regime, x, y)
}

/// Loads every dataset a manifest lists, validating regimes against `ifm`.
pub fn load_datasets(manifest: &Path, ifm: &IfmStructure) -> Result<Vec<RegimeDataset>> {
    let entries = load_manifest(manifest)?;
    if entries.is_empty() {
        return Err(Error::InsufficientData("manifest lists no datasets".into()));
    }
    entries
        .into_iter()
        .map(|e| {
            ifm.space().check(&e.regime)?;
            load_csv(&e.file, ifm, e.regime)
        })
        .collect()
}

/// Writes rows with a header of variable names and an optional `y` column.
pub fn write_csv(path: &Path, var_names: &[String], x: &[Vec<f64>], y: Option<&[f64]>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::InvalidArgument(format!("{}: {other:?}", path.display())),
    })?;
    let mut header: Vec<&str> = var_names.iter().map(String::as_str).collect();
    if y.is_some() {
        header.push("y");
    }
    w.write_record(&header)?;
    for (j, row) in x.iter().enumerate() {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        if let Some(y) = y {
            rec.push(y[j].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
