use ndarray::Array2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{ae_forward, Autoencoder, NoiseSource};
use crate::neuro::{AdamConfig, AdamState, Mode, Parameterized};
use crate::rng::derived;
use crate::{Error, Result};

/// Largest joint symbol space for which exhaustive cycling is attempted.
const MAX_JOINT_PATTERNS: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AeHyper {
    pub train_ebn0_db: f64,
    pub batch_size: usize,
    /// Total training samples; rounded up to whole batches.
    pub samples: usize,
    pub learning_rate: f64,
    /// Multiplicative learning-rate factor applied after every pass over the joint patterns.
    pub lr_decay: f64,
    pub seed: u64,
}

impl Default for AeHyper {
    fn default() -> Self {
        Self {
            train_ebn0_db: 5.0,
            batch_size: 256,
            samples: 200_000,
            learning_rate: 1e-4,
            lr_decay: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub visited: usize,
    pub total: usize,
    pub samples: usize,
}

impl CoverageReport {
    pub fn complete(&self) -> bool {
        self.visited == self.total
    }
}

/// Mean loss over one pass through the permuted joint patterns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AeEpochStats {
    pub cycle: usize,
    pub samples_seen: usize,
    pub train_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AeOutcome {
    pub autoencoder: Autoencoder,
    pub curve: Vec<AeEpochStats>,
    pub coverage: CoverageReport,
    /// Mean loss over the last full pass (or the partial pass if none completed).
    pub final_loss: f64,
}

/// Cycles through independently permuted enumerations of all M^J joint symbols.
struct PatternStream {
    order: Vec<usize>,
    cursor: usize,
    rng: crate::rng::SimRng,
}

impl PatternStream {
    fn next_batch(&mut self, n: usize) -> (Vec<usize>, bool) {
        let mut out = Vec::with_capacity(n);
        let mut wrapped = false;
        while out.len() < n {
            if self.cursor == self.order.len() {
                self.order.shuffle(&mut self.rng);
                self.cursor = 0;
                wrapped = true;
            }
            let take = (n - out.len()).min(self.order.len() - self.cursor);
            out.extend_from_slice(&self.order[self.cursor..self.cursor + take]);
            self.cursor += take;
        }
        (out, wrapped)
    }
}

/// End-to-end Adam training on the summed cross-entropy, with per-step AWGN at
/// `train_ebn0_db` calibrated on the batch power and held constant for the gradient.
pub fn train_autoencoder(mut ae: Autoencoder, hyper: &AeHyper) -> Result<AeOutcome> {
    if hyper.batch_size < 2 || hyper.samples == 0 || !(hyper.lr_decay > 0.0 && hyper.lr_decay <= 1.0) {
        return Err(Error::InvalidArgument(format!("bad autoencoder hyper-parameters {hyper:?}")));
    }
    let cfg = ae.config.clone();
    let (users, m) = (cfg.users, cfg.bits_per_symbol);
    let total = cfg.joint_hypotheses();
    if total > MAX_JOINT_PATTERNS {
        return Err(Error::InvalidArgument(format!("{total} joint patterns are too many to enumerate")));
    }
    let mut adam = AdamState::new(AdamConfig::with_learning_rate(hyper.learning_rate))?;
    let mut shuffle = derived(hyper.seed, &[1]);
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut shuffle);
    let mut stream = PatternStream {
        order,
        cursor: 0,
        rng: shuffle,
    };
    let mut noise_rng = derived(hyper.seed, &[2]);
    let mut visited = vec![false; total];
    let mut n_visited = 0;

    let steps = hyper.samples.div_ceil(hyper.batch_size);
    let bits_cols = users * m;
    let mut curve = Vec::new();
    let (mut cycle_loss, mut cycle_seen, mut seen) = (0.0, 0usize, 0usize);
    let mut bits = Array2::<f64>::zeros((hyper.batch_size, bits_cols));
    for step in 0..steps {
        let (batch, wrapped) = stream.next_batch(hyper.batch_size);
        if wrapped && cycle_seen > 0 {
            curve.push(AeEpochStats {
                cycle: curve.len() + 1,
                samples_seen: seen,
                train_loss: cycle_loss / cycle_seen as f64,
            });
            adam.config.learning_rate *= hyper.lr_decay;
            cycle_loss = 0.0;
            cycle_seen = 0;
        }
        for (r, &p) in batch.iter().enumerate() {
            if !visited[p] {
                visited[p] = true;
                n_visited += 1;
            }
            for c in 0..bits_cols {
                bits[[r, c]] = ((p >> (bits_cols - 1 - c)) & 1) as f64;
            }
        }
        let noise = if hyper.train_ebn0_db.is_infinite() && hyper.train_ebn0_db > 0.0 {
            NoiseSource::Disabled
        } else {
            NoiseSource::Awgn {
                ebn0_db: hyper.train_ebn0_db,
                rng: &mut noise_rng,
            }
        };
        let fwd = ae_forward(&ae, bits.view(), noise, Mode::Train)?;
        let (loss, grads) = ae.loss_and_backward(&fwd, bits.view())?;
        if !loss.is_finite() {
            return Err(Error::Diverged(format!("autoencoder loss {loss} at step {step}")));
        }
        ae.update_running_stats(&fwd);
        adam.update(ae.param_slices_mut(), &grads.slices())?;
        cycle_loss += loss * batch.len() as f64;
        cycle_seen += batch.len();
        seen += batch.len();
    }
    let final_loss = if cycle_seen >= total || curve.is_empty() {
        cycle_loss / cycle_seen.max(1) as f64
    } else {
        curve.last().expect("non-empty").train_loss
    };
    if cycle_seen > 0 {
        curve.push(AeEpochStats {
            cycle: curve.len() + 1,
            samples_seen: seen,
            train_loss: cycle_loss / cycle_seen as f64,
        });
    }
    Ok(AeOutcome {
        autoencoder: ae,
        curve,
        coverage: CoverageReport {
            visited: n_visited,
            total,
            samples: seen,
        },
        final_loss,
    })
}
