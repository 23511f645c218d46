//! Closed-form arithmetic-operation counts and their normalisation to cost units.

use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::model::SystemConfig;

use super::DetectError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperationCount {
    pub multiplications: u64,
    pub additions: u64,
    pub log_exp: u64,
}

impl OperationCount {
    pub fn total(&self) -> u64 {
        self.multiplications + self.additions + self.log_exp
    }
}

impl Add for OperationCount {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            multiplications: self.multiplications + rhs.multiplications,
            additions: self.additions + rhs.additions,
            log_exp: self.log_exp + rhs.log_exp,
        }
    }
}

impl AddAssign for OperationCount {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

/// Relative cost of one operation of each kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityWeights {
    pub add_units: u64,
    pub mul_units: u64,
    pub exp_units: u64,
}

impl Default for ComplexityWeights {
    fn default() -> Self {
        Self {
            add_units: 1,
            mul_units: 10,
            exp_units: 20,
        }
    }
}

impl ComplexityWeights {
    pub fn unit() -> Self {
        Self {
            add_units: 1,
            mul_units: 1,
            exp_units: 1,
        }
    }
}

pub fn normalize_complexity(counts: &OperationCount, weights: &ComplexityWeights) -> u64 {
    counts.additions * weights.add_units + counts.multiplications * weights.mul_units + counts.log_exp * weights.exp_units
}

/// Average Log-MPA cost per frame on a regular graph with overlap `d_f`:
///
/// * mul = `M·K·d_f·(4·d_f·M^(d_f-1) + 5)`
/// * add = `M·K·d_f·(M^(d_f-1)·(4·d_f - 2 + I_t·(2 + 1/M)) + I_t·(2 - 1/N) + 5)`
/// * log/exp = `M·K·d_f·I_t·(M^(d_f-1) + 1) + 1`
///
/// The addition count is evaluated exactly in integers over the common
/// denominator `M·N` and rounded to the nearest integer when it is fractional.
pub fn count_logmpa_ops(cfg: &SystemConfig, iterations: usize) -> Result<OperationCount, DetectError> {
    let df = cfg
        .overlap_degree()
        .ok_or_else(|| DetectError::Parameter("overlap degree J·N/K is not an integer".into()))? as u64;
    if df == 0 {
        return Err(DetectError::Parameter("overlap degree must be positive".into()));
    }
    let m = cfg.codebook_size as u64;
    let k = cfg.resources as u64;
    let n = cfg.nonzero_per_codeword as u64;
    let it = iterations as u64;
    let g = m.pow((df - 1) as u32);
    let edge_hyps = m * k * df;

    let multiplications = edge_hyps * (4 * df * g + 5);
    let inner = g * (4 * df - 2) * m * n + it * g * (2 * m + 1) * n + it * (2 * n - 1) * m + 5 * m * n;
    let num = edge_hyps * inner;
    let den = m * n;
    let additions = (num + den / 2) / den;
    let log_exp = edge_hyps * it * (g + 1) + 1;
    Ok(OperationCount {
        multiplications,
        additions,
        log_exp,
    })
}

/// Dense decoder cost with `hidden_layers` layers of `hidden_width` nodes:
/// mul = `N_HN·(2K + N_L·N_HN + 2J)`, add = `N_HN·(N_L - 1) + 2J`, no log/exp.
pub fn count_dnn_ops(resources: usize, users: usize, hidden_layers: usize, hidden_width: usize) -> OperationCount {
    let (k, j, nl, nh) = (resources as u64, users as u64, hidden_layers as u64, hidden_width as u64);
    OperationCount {
        multiplications: nh * (2 * k + nl * nh + 2 * j),
        additions: nh * nl.saturating_sub(1) + 2 * j,
        log_exp: 0,
    }
}
