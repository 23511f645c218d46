use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{DetectorSpec, StoppingRule};
use crate::ae::AeHyper;
use crate::dl::TrainHyper;
use crate::model::{load_codebook, load_factor_graph, ChannelGain, Codebook, FactorGraph, SystemConfig};
use crate::{Error, Result};

/// Hidden-stack override for a network part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HiddenStack {
    pub layers: usize,
    pub width: usize,
}

/// One JSON document describing a run: system, codebook and factor graph,
/// detector and training parameters. Every field is optional; command-line
/// flags take precedence over it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Checked against the codebook when given.
    pub system: Option<SystemConfig>,
    /// Codebook JSON; the bundled reference codebook when absent.
    pub codebook: Option<PathBuf>,
    /// Factor-graph text file; checked against the codebook and used for autoencoder masks.
    pub factor_graph: Option<PathBuf>,
    pub gains: Option<Vec<f64>>,
    pub detector: Option<DetectorSpec>,
    pub ebn0_db: Option<Vec<f64>>,
    pub stop: Option<StoppingRule>,
    pub decoder: Option<HiddenStack>,
    pub encoder: Option<HiddenStack>,
    pub decoder_training: Option<TrainHyper>,
    pub autoencoder_training: Option<AeHyper>,
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }

    /// The configured codebook, validated against `system` and `factor_graph`.
    pub fn codebook(&self) -> Result<Codebook> {
        let cb = match &self.codebook {
            Some(p) => load_codebook(p)?,
            None => Codebook::reference(),
        };
        if let Some(cfg) = &self.system {
            cb.check_config(cfg)?;
        }
        if let Some(p) = &self.factor_graph {
            cb.check_graph(&load_factor_graph(p)?)?;
        }
        Ok(cb)
    }

    /// The configured factor graph, or the one implied by the codebook supports.
    pub fn factor_graph(&self) -> Result<FactorGraph> {
        match &self.factor_graph {
            Some(p) => load_factor_graph(p),
            None => Ok(self.codebook()?.factor_graph()),
        }
    }

    pub fn gains(&self, resources: usize) -> Result<ChannelGain> {
        match &self.gains {
            Some(g) => Ok(ChannelGain::new(g.clone())?),
            None => Ok(ChannelGain::ones(resources)),
        }
    }
}
