use std::path::Path;

use serde::{Deserialize, Serialize};

use super::grid::Grid;
use super::model::EnergyModel;
use crate::error::{Error, Result};
use crate::model::io::{read_json, write_json, GraphSpec};
use crate::nn::Mlp;

pub const MODEL_FORMAT: &str = "ifactor-energy-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetRecord {
    pub factor: usize,
    pub value: Vec<usize>,
    pub input: usize,
    pub hidden: usize,
    pub params: Vec<f64>,
}

/// On-disk form of an [`EnergyModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format: String,
    pub format_version: u32,
    pub ifm_fingerprint: String,
    pub graph: GraphSpec,
    pub grid_edges: Vec<Vec<f64>>,
    pub hidden: usize,
    pub seed: u64,
    pub nets: Vec<NetRecord>,
}

impl ModelFile {
    pub fn from_model(model: &EnergyModel) -> Self {
        let ifm = model.ifm();
        let nets = (0..model.num_nets())
            .map(|n| {
                let (k, v) = model.net_owner(n);
                let net = model.net(n);
                NetRecord {
                    factor: k,
                    value: ifm.factor_value_levels(k, v),
                    input: net.input(),
                    hidden: net.hidden(),
                    params: net.params().to_vec(),
                }
            })
            .collect();
        Self {
            format: MODEL_FORMAT.into(),
            format_version: MODEL_FORMAT_VERSION,
            ifm_fingerprint: ifm.fingerprint(),
            graph: GraphSpec::from_structure(ifm),
            grid_edges: model.grid().all_edges().to_vec(),
            hidden: model.hidden(),
            seed: model.seed(),
            nets,
        }
    }

    pub fn into_model(self) -> Result<EnergyModel> {
        if self.format != MODEL_FORMAT {
            return Err(Error::ModelFormat(format!("unexpected format `{}`", self.format)));
        }
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported format version {} (expected {MODEL_FORMAT_VERSION})",
                self.format_version
            )));
        }
        let ifm = self.graph.to_structure()?;
        if ifm.fingerprint() != self.ifm_fingerprint {
            return Err(Error::ModelFormat("structure fingerprint mismatch".into()));
        }
        let grid = Grid::from_edges(self.grid_edges)?;
        let mut model = EnergyModel::new(ifm, grid, self.hidden, self.seed)?;
        if self.nets.len() != model.num_nets() {
            return Err(Error::ModelFormat(format!(
                "{} networks stored, structure needs {}",
                self.nets.len(),
                model.num_nets()
            )));
        }
        for (n, rec) in self.nets.into_iter().enumerate() {
            let (k, v) = model.net_owner(n);
            let expected_value = model.ifm().factor_value_levels(k, v);
            let expected_input = model.ifm().factor(k).vars().len();
            if rec.factor != k || rec.value != expected_value || rec.input != expected_input {
                return Err(Error::ModelFormat(format!("network {n} is out of order or misshaped")));
            }
            if rec.params.iter().any(|p| !p.is_finite()) {
                return Err(Error::ModelFormat(format!("network {n} has non-finite parameters")));
            }
            *model.net_mut(n) = Mlp::from_params(rec.input, rec.hidden, rec.params)
                .ok_or_else(|| Error::ModelFormat(format!("network {n} has the wrong parameter count")))?;
        }
        Ok(model)
    }
}

pub fn save_model(model: &EnergyModel, path: &Path) -> Result<()> {
    write_json(path, &ModelFile::from_model(model))
}

pub fn load_model(path: &Path) -> Result<EnergyModel> {
    read_json::<ModelFile>(path)?.into_model()
}
