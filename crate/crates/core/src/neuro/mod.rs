//! A small dense-network engine: fully connected layers, batch normalisation,
//! binary cross-entropy, reverse-mode gradients and Adam.
//!
//! Everything runs in `f64`. Batches are `batch × features` matrices.

mod activation;
mod adam;
mod batchnorm;
mod checkpoint;
mod gradcheck;
mod init;
mod loss;
mod network;

pub use activation::Activation;
pub use adam::{sgd_step, AdamConfig, AdamState};
pub use batchnorm::{BatchNormCache, BatchNormState, DEFAULT_BN_EPSILON, DEFAULT_BN_MOMENTUM};
pub use checkpoint::{Checkpoint, LayerSnapshot, NetworkSnapshot, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use gradcheck::{compare_gradients, finite_difference, grad_check, GradCheckReport, Parameterized};
pub use init::xavier_init;
pub use loss::{cross_entropy, cross_entropy_grad, PROB_FLOOR};
pub use network::{DenseLayer, ForwardPass, Gradients, Layer, LayerGrads, LayerSpec, Mode, Network};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NeuroError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("batch normalisation in train mode needs at least 2 rows, got {0}")]
    BatchTooSmall(usize),
    #[error("backward pass needs a retained train-mode forward pass")]
    MissingForward,
    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),
    #[error("invalid hyper-parameter: {0}")]
    Hyper(String),
}
