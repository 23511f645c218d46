//! Multi-user detectors and their arithmetic-cost accounting.

mod complexity;
mod logmpa;
mod map;

pub use complexity::{count_dnn_ops, count_logmpa_ops, normalize_complexity, ComplexityWeights, OperationCount};
pub use logmpa::{logmpa_detect, LogMpaDetector, LogMpaOptions};
pub use map::{map_detect, MapDetector, DEFAULT_MAP_GUARD};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("MAP enumeration of {hypotheses} joint hypotheses exceeds the guard limit {limit}")]
    TooManyHypotheses { hypotheses: usize, limit: usize },
    #[error("invalid noise variance {0}")]
    InvalidNoise(f64),
    #[error("received frame has {got} reals, detector expects {expected}")]
    Width { got: usize, expected: usize },
    #[error("non-finite message at resource {resource} after iteration {iteration}")]
    NonFiniteMessage { resource: usize, iteration: usize },
    #[error("invalid detector parameter: {0}")]
    Parameter(String),
}

/// Per-user hard decisions, optionally with log-marginals normalised so each user's maximum is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolDecision {
    pub symbols: Vec<usize>,
    pub log_marginals: Option<Vec<Vec<f64>>>,
}

/// Index of the largest value; ties go to the lowest index.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
