//! The learned multi-user decoder: a dense network mapping one received
//! frame (2K reals) to the mJ transmitted bits.

mod dataset;
mod train;

pub use dataset::{generate_training_set, TrainingGroup, TrainingSet};
pub use train::{train_decoder, EpochStats, Provenance, TrainHyper, TrainedDecoder, TrainingOutcome};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::SystemConfig;
use crate::neuro::{Activation, LayerSpec, Network, NeuroError};

/// Hard decision on a sigmoid output. Exactly 0.5 maps to 1.
pub fn hard_decision(p: f64) -> u8 {
    u8::from(p >= 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoderArch {
    pub input_width: usize,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub output_width: usize,
}

impl DecoderArch {
    /// 6 hidden layers of 48 nodes between 2K inputs and mJ outputs.
    pub fn for_config(cfg: &SystemConfig) -> Self {
        Self {
            input_width: cfg.signal_width(),
            hidden_layers: 6,
            hidden_width: 48,
            output_width: cfg.frame_bits(),
        }
    }

    pub fn with_hidden(mut self, layers: usize, width: usize) -> Self {
        self.hidden_layers = layers;
        self.hidden_width = width;
        self
    }

    pub fn layer_specs(&self) -> Vec<LayerSpec> {
        let mut specs = LayerSpec::hidden_stack(self.hidden_layers, self.hidden_width);
        specs.push(LayerSpec::new(self.output_width, Activation::Sigmoid, false));
        specs
    }

    pub fn build<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Network, NeuroError> {
        Network::new(self.input_width, &self.layer_specs(), rng)
    }

    /// Recovers the architecture of a network built by [`DecoderArch::build`].
    pub fn of_network(net: &Network) -> Option<Self> {
        let specs = net.architecture();
        let (last, hidden) = specs.split_last()?;
        let width = hidden.first().map_or(0, |s| s.width);
        let regular = hidden
            .iter()
            .all(|s| s.width == width && s.activation == Activation::Tanh && s.batch_norm);
        (regular && last.activation == Activation::Sigmoid && !last.batch_norm).then_some(Self {
            input_width: net.input_width(),
            hidden_layers: hidden.len(),
            hidden_width: width,
            output_width: last.width,
        })
    }
}
