//! JSON model files: a header with the architecture and truncation level,
//! followed by the embedding and each layer as row-major arrays.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use textsplit_core::nnlm::NnlmParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub v_size: usize,
    pub n_ctx: usize,
    pub embed_dim: usize,
    pub hidden_widths: Vec<usize>,
    pub trunc_b: f64,
    /// `v_size x embed_dim`, row-major.
    pub embedding: Vec<f64>,
    /// Hidden layers then the output projection, each `out x in`, row-major.
    pub layers: Vec<Vec<f64>>,
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("model file IO: {0}")]
    Io(#[from] std::io::Error),
    #[error("model file JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("model file: {0}")]
    Invalid(#[from] textsplit_core::Error),
}

impl ModelFile {
    pub fn from_params(params: &NnlmParams, trunc_b: f64) -> Self {
        let n_layers = params.layer_shapes().len();
        Self {
            v_size: params.v_size(),
            n_ctx: params.n_ctx(),
            embed_dim: params.embed_dim(),
            hidden_widths: params.hidden_widths().to_vec(),
            trunc_b,
            embedding: params.embedding().to_vec(),
            layers: (0..n_layers).map(|l| params.layer(l).to_vec()).collect(),
        }
    }

    pub fn into_params(self) -> Result<NnlmParams, ModelError> {
        let mut values = self.embedding;
        for layer in self.layers {
            values.extend(layer);
        }
        Ok(NnlmParams::from_parts(
            self.v_size,
            self.n_ctx,
            self.embed_dim,
            self.hidden_widths,
            values,
        )?)
    }
}

pub fn save_model(path: &Path, params: &NnlmParams, trunc_b: f64) -> Result<(), ModelError> {
    let json = serde_json::to_string(&ModelFile::from_params(params, trunc_b))?;
    fs::write(path, json)?;
    Ok(())
}

/// Returns the parameters and the stored truncation level.
pub fn load_model(path: &Path) -> Result<(NnlmParams, f64), ModelError> {
    let file: ModelFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    let trunc_b = file.trunc_b;
    Ok((file.into_params()?, trunc_b))
}
