//! Multi-user SCMA / DCMA physical-layer laboratory.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: system dimensions, codebooks, factor graphs, superposition and the AWGN channel.
//! * [`detect`]: exhaustive MAP detection, log-domain message passing and operation accounting.
//! * [`neuro`]: a small dense-network engine (batch norm, cross-entropy, Adam, gradient checks).
//! * [`dl`]: the learned multi-user decoder and its training-set generator.
//! * [`ae`]: the end-to-end autoencoder that learns sparse (or dense) codebooks.
//! * [`harness`]: Monte-Carlo BER/SER sweeps, complexity tables, runtime benchmarks and plot data.

pub mod ae;
pub mod detect;
pub mod dl;
mod error;
pub mod harness;
pub mod model;
pub mod neuro;
pub mod rng;

pub use error::{Error, Result};
