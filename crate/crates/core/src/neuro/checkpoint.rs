use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{Activation, BatchNormState, DenseLayer, Layer, Network, NeuroError};

pub const CHECKPOINT_FORMAT: &str = "scma-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSnapshot {
    pub activation: Activation,
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
    pub batch_norm: Option<BatchNormState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSnapshot {
    pub input_width: usize,
    pub layers: Vec<LayerSnapshot>,
}

impl NetworkSnapshot {
    pub fn to_network(&self) -> Result<Network, NeuroError> {
        let layers = self
            .layers
            .iter()
            .map(|l| Layer {
                dense: DenseLayer {
                    weights: l.weights.as_standard_layout().into_owned(),
                    biases: l.biases.clone(),
                    activation: l.activation,
                },
                batch_norm: l.batch_norm.clone(),
            })
            .collect();
        Network::from_layers(self.input_width, layers).map_err(|e| NeuroError::Checkpoint(e.to_string()))
    }
}

impl Network {
    pub fn snapshot(&self) -> NetworkSnapshot {
        NetworkSnapshot {
            input_width: self.input_width(),
            layers: self
                .layers()
                .iter()
                .map(|l| LayerSnapshot {
                    activation: l.dense.activation,
                    weights: l.dense.weights.clone(),
                    biases: l.dense.biases.clone(),
                    batch_norm: l.batch_norm.clone(),
                })
                .collect(),
        }
    }
}

/// A set of named networks plus a free-form JSON header. Floats round-trip exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub header: serde_json::Value,
    pub sections: BTreeMap<String, NetworkSnapshot>,
}

impl Checkpoint {
    pub fn new(header: serde_json::Value) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            header,
            sections: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, net: &Network) {
        self.sections.insert(name.into(), net.snapshot());
    }

    pub fn network(&self, name: &str) -> Result<Network, NeuroError> {
        self.sections
            .get(name)
            .ok_or_else(|| NeuroError::Checkpoint(format!("missing section `{name}`")))?
            .to_network()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, NeuroError> {
        let ck: Self = serde_json::from_str(text).map_err(|e| NeuroError::Checkpoint(e.to_string()))?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(NeuroError::Checkpoint(format!("unknown format `{}`", ck.format)));
        }
        if ck.version != CHECKPOINT_VERSION {
            return Err(NeuroError::Checkpoint(format!("unsupported version {}", ck.version)));
        }
        for (name, snap) in &ck.sections {
            snap.to_network()
                .map_err(|e| NeuroError::Checkpoint(format!("section `{name}`: {e}")))?;
        }
        Ok(ck)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> crate::Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| crate::Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> crate::Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
        Ok(Self::from_json(&text)?)
    }
}
