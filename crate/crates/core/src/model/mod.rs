//! SCMA system model: dimensions, codebooks, factor graph, superposition and channel.

mod channel;
mod codebook;
mod config;
mod frames;
mod graph;

pub use channel::{add_awgn, ebn0_db_to_linear, ebn0_to_snr, ensemble_power, noise_variance, ChannelGain, ReceivedSignal};
pub use codebook::{encode_user, load_codebook, superpose, Codebook, SignalTable, UserCodebook};
pub use config::{AccessMode, SystemConfig};
pub use frames::{generate_frames, FrameBatch};
pub use graph::{derive_masks, load_factor_graph, FactorGraph, MappingMask};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid system configuration: {0}")]
    Config(String),
    #[error("codebook parse error: {0}")]
    Parse(String),
    #[error("user {user}: codeword {codeword} is non-zero at resource {resource}, outside its support")]
    SupportViolation {
        user: usize,
        codeword: usize,
        resource: usize,
    },
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("factor graph: {0}")]
    Graph(String),
    #[error("non-positive value for {what}: {value}")]
    NonPositive { what: &'static str, value: f64 },
}

/// Big-endian value of a bit group: `[1, 0]` is symbol 2.
pub fn bits_to_index(bits: &[u8]) -> usize {
    bits.iter().fold(0usize, |acc, &b| (acc << 1) | usize::from(b & 1))
}

/// Inverse of [`bits_to_index`], writing `out.len()` bits.
pub fn index_to_bits(index: usize, out: &mut [u8]) {
    let m = out.len();
    for (i, bit) in out.iter_mut().enumerate() {
        *bit = ((index >> (m - 1 - i)) & 1) as u8;
    }
}
