//! JSON checkpoint: config, input dimension and row-major layer parameters
//! under a format/version tag.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{Dense, MlpConfig, MlpError, MlpModel};

pub const CHECKPOINT_FORMAT: &str = "ddi-mlp-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Deserialize)]
struct Header {
    format: String,
    version: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerFile {
    inputs: usize,
    outputs: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointFile {
    format: String,
    version: u32,
    config: MlpConfig,
    input_dim: usize,
    layers: Vec<LayerFile>,
}

fn bad(msg: impl Into<String>) -> MlpError {
    MlpError::Checkpoint(msg.into())
}

impl MlpModel {
    pub fn to_checkpoint_string(&self) -> String {
        let file = CheckpointFile {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config: self.config().clone(),
            input_dim: self.input_dim(),
            layers: self
                .layers()
                .iter()
                .map(|l| LayerFile {
                    inputs: l.inputs(),
                    outputs: l.outputs(),
                    weights: l.weights.iter().copied().collect(),
                    bias: l.bias.to_vec(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("checkpoint serializes")
    }

    pub fn from_checkpoint_str(text: &str) -> Result<MlpModel, MlpError> {
        let header: Header = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        if header.format != CHECKPOINT_FORMAT {
            return Err(bad(format!("unexpected format tag {:?}", header.format)));
        }
        if header.version != CHECKPOINT_VERSION {
            return Err(MlpError::VersionMismatch {
                found: header.version,
                expected: CHECKPOINT_VERSION,
            });
        }
        let file: CheckpointFile = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        file.config.validate()?;
        let mut layers = Vec::with_capacity(file.layers.len());
        for (i, l) in file.layers.into_iter().enumerate() {
            let expected = l
                .inputs
                .checked_mul(l.outputs)
                .ok_or_else(|| bad(format!("layer {i}: shape overflow")))?;
            if l.weights.len() != expected {
                return Err(bad(format!(
                    "layer {i}: {} weights for a {}x{} matrix",
                    l.weights.len(),
                    l.outputs,
                    l.inputs
                )));
            }
            if l.weights.iter().chain(&l.bias).any(|v| !v.is_finite()) {
                return Err(bad(format!("layer {i}: non-finite parameter")));
            }
            let weights = Array2::from_shape_vec((l.outputs, l.inputs), l.weights)
                .map_err(|e| bad(format!("layer {i}: {e}")))?;
            layers.push(Dense {
                weights,
                bias: Array1::from(l.bias),
            });
        }
        let model = MlpModel::from_layers(file.config, layers)?;
        if model.input_dim() != file.input_dim {
            return Err(bad(format!(
                "input_dim {} disagrees with first layer ({})",
                file.input_dim,
                model.input_dim()
            )));
        }
        Ok(model)
    }
}

pub fn save_checkpoint(model: &MlpModel, path: &Path) -> Result<(), MlpError> {
    std::fs::write(path, model.to_checkpoint_string()).map_err(|source| MlpError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_checkpoint(path: &Path) -> Result<MlpModel, MlpError> {
    let text = std::fs::read_to_string(path).map_err(|source| MlpError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    MlpModel::from_checkpoint_str(&text)
}
