use crate::model::{ChannelGain, Codebook, ReceivedSignal};

use super::{DetectError, SymbolDecision};

pub const DEFAULT_MAP_GUARD: usize = 1_000_000;

/// Exhaustive joint MAP detector over all `M^J` symbol combinations.
///
/// With equiprobable symbols and white Gaussian noise the joint posterior is
/// maximised by the hypothesis whose clean superposition is nearest to the
/// received vector, so the superpositions are tabulated once up front.
#[derive(Debug, Clone)]
pub struct MapDetector {
    users: usize,
    codebook_size: usize,
    width: usize,
    hypotheses: usize,
    /// Row-major `hypotheses × width`, hypotheses in lexicographic order (user 0 most significant).
    points: Vec<f64>,
}

impl MapDetector {
    pub fn new(codebook: &Codebook, gains: &ChannelGain, guard: usize) -> Result<Self, DetectError> {
        let users = codebook.users();
        let m = codebook.codebook_size();
        let hypotheses = (0..users).try_fold(1usize, |acc, _| acc.checked_mul(m));
        let hypotheses = match hypotheses {
            Some(h) if h <= guard => h,
            Some(h) => return Err(DetectError::TooManyHypotheses { hypotheses: h, limit: guard }),
            None => {
                return Err(DetectError::TooManyHypotheses {
                    hypotheses: usize::MAX,
                    limit: guard,
                })
            }
        };
        let width = 2 * codebook.resources();
        if gains.len() != width {
            return Err(DetectError::Width {
                got: gains.len(),
                expected: width,
            });
        }
        let table = codebook.signal_table(gains);
        let mut points = vec![0.0; hypotheses * width];
        let mut symbols = vec![0usize; users];
        for (h, row) in points.chunks_mut(width).enumerate() {
            let mut rest = h;
            for j in (0..users).rev() {
                symbols[j] = rest % m;
                rest /= m;
            }
            table.superpose_into(&symbols, row);
        }
        Ok(Self {
            users,
            codebook_size: m,
            width,
            hypotheses,
            points,
        })
    }

    pub fn hypotheses(&self) -> usize {
        self.hypotheses
    }

    /// Nearest hypothesis; the first (lexicographically smallest) wins ties.
    pub fn detect_symbols(&self, received: &[f64]) -> Result<Vec<usize>, DetectError> {
        if received.len() != self.width {
            return Err(DetectError::Width {
                got: received.len(),
                expected: self.width,
            });
        }
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (h, row) in self.points.chunks_exact(self.width).enumerate() {
            let mut dist = 0.0;
            for (p, y) in row.iter().zip(received) {
                let d = y - p;
                dist += d * d;
            }
            if dist < best_dist {
                best_dist = dist;
                best = h;
            }
        }
        let mut symbols = vec![0usize; self.users];
        for j in (0..self.users).rev() {
            symbols[j] = best % self.codebook_size;
            best /= self.codebook_size;
        }
        Ok(symbols)
    }

    pub fn detect(&self, received: &ReceivedSignal) -> Result<SymbolDecision, DetectError> {
        Ok(SymbolDecision {
            symbols: self.detect_symbols(&received.samples)?,
            log_marginals: None,
        })
    }
}

/// One-shot joint MAP detection with the default guard limit.
///
/// `noise_var` only scales the likelihood and does not move the argmax; zero is
/// accepted as the noiseless limit.
pub fn map_detect(
    received: &ReceivedSignal,
    codebook: &Codebook,
    gains: &ChannelGain,
    noise_var: f64,
) -> Result<SymbolDecision, DetectError> {
    if noise_var.is_nan() || noise_var < 0.0 {
        return Err(DetectError::InvalidNoise(noise_var));
    }
    MapDetector::new(codebook, gains, DEFAULT_MAP_GUARD)?.detect(received)
}
