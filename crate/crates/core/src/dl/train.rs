use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{hard_decision, DecoderArch, TrainingGroup, TrainingSet};
use crate::model::SystemConfig;
use crate::neuro::{cross_entropy, AdamConfig, AdamState, Checkpoint, Mode, Network, Parameterized};
use crate::rng::derived;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainHyper {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Multiplicative learning-rate factor applied after every epoch.
    pub lr_decay: f64,
    pub seed: u64,
    /// Share of the set held out to select the best epoch; 0 disables selection.
    pub validation_fraction: f64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        Self {
            batch_size: 256,
            epochs: 20,
            learning_rate: 1e-4,
            lr_decay: 1.0,
            seed: 0,
            validation_fraction: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config: SystemConfig,
    pub groups: Vec<TrainingGroup>,
    pub samples: usize,
    pub hyper: TrainHyper,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub final_loss: f64,
    pub best_validation_loss: Option<f64>,
}

/// An infer-mode decoder network together with how it was trained.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedDecoder {
    pub network: Network,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingOutcome {
    pub decoder: TrainedDecoder,
    /// Loss of the very first mini-batch before any update.
    pub initial_loss: f64,
    pub curve: Vec<EpochStats>,
}

const CHECKPOINT_KIND: &str = "dl-decoder";

impl TrainedDecoder {
    pub fn config(&self) -> &SystemConfig {
        &self.provenance.config
    }

    /// Output probabilities for a `frames × 2K` batch.
    pub fn probabilities(&self, received: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self.network.predict(received)?)
    }

    /// Hard bits for a `frames × 2K` batch, row-major `frames × mJ`.
    pub fn decode_batch(&self, received: ArrayView2<f64>) -> Result<Vec<u8>> {
        Ok(self.probabilities(received)?.iter().map(|&p| hard_decision(p)).collect())
    }

    pub fn decode(&self, received: &[f64]) -> Result<Vec<u8>> {
        let view = ArrayView2::from_shape((1, received.len()), received)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        self.decode_batch(view)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let header = serde_json::json!({
            "kind": CHECKPOINT_KIND,
            "provenance": self.provenance,
        });
        let mut ck = Checkpoint::new(header);
        ck.insert("decoder", &self.network);
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        if ck.header.get("kind").and_then(|k| k.as_str()) != Some(CHECKPOINT_KIND) {
            return Err(Error::InvalidArgument("checkpoint does not hold a learned decoder".into()));
        }
        let provenance: Provenance = serde_json::from_value(ck.header["provenance"].clone())
            .map_err(|e| Error::InvalidArgument(format!("decoder provenance: {e}")))?;
        let network = ck.network("decoder")?;
        let cfg = &provenance.config;
        if network.input_width() != cfg.signal_width() || network.output_width() != cfg.frame_bits() {
            return Err(Error::InvalidArgument("decoder widths disagree with its configuration".into()));
        }
        Ok(Self { network, provenance })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_checkpoint().save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }
}

/// Mini-batch Adam on the summed binary cross-entropy. The network with the
/// lowest held-out loss is returned, with its batch-norm running statistics.
pub fn train_decoder(arch: &DecoderArch, cfg: &SystemConfig, set: &TrainingSet, hyper: &TrainHyper) -> Result<TrainingOutcome> {
    if set.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    if hyper.batch_size < 2
        || hyper.epochs == 0
        || !(0.0..0.5).contains(&hyper.validation_fraction)
        || !(hyper.lr_decay > 0.0 && hyper.lr_decay <= 1.0)
    {
        return Err(Error::InvalidArgument(format!("bad training hyper-parameters {hyper:?}")));
    }
    if set.inputs.ncols() != arch.input_width || set.labels.ncols() != arch.output_width {
        return Err(Error::InvalidArgument("training set widths do not match the architecture".into()));
    }
    let mut net = arch.build(&mut derived(hyper.seed, &[0]))?;
    let mut adam = AdamState::new(AdamConfig::with_learning_rate(hyper.learning_rate))?;

    let mut order: Vec<usize> = (0..set.len()).collect();
    order.shuffle(&mut derived(hyper.seed, &[1]));
    let n_val = (set.len() as f64 * hyper.validation_fraction) as usize;
    let n_val = if n_val >= 2 { n_val } else { 0 };
    let (val_idx, train_idx) = order.split_at(n_val);
    let val_x = set.inputs.select(Axis(0), val_idx);
    let val_y = set.labels.select(Axis(0), val_idx);
    let mut train_idx = train_idx.to_vec();
    let mut shuffle_rng = derived(hyper.seed, &[2]);

    let mut curve = Vec::with_capacity(hyper.epochs);
    let mut initial_loss = None;
    let mut best: Option<(f64, usize, Network)> = None;
    for epoch in 1..=hyper.epochs {
        train_idx.shuffle(&mut shuffle_rng);
        let (mut loss_sum, mut seen) = (0.0, 0usize);
        for chunk in train_idx.chunks(hyper.batch_size) {
            if chunk.len() < 2 {
                continue;
            }
            let x = set.inputs.select(Axis(0), chunk);
            let y = set.labels.select(Axis(0), chunk);
            let pass = net.forward(x.view(), Mode::Train)?;
            let (loss, grads, _) = net.loss_and_backward(&pass, y.view())?;
            if !loss.is_finite() {
                return Err(Error::Diverged(format!("loss {loss} at epoch {epoch} after {seen} samples")));
            }
            initial_loss.get_or_insert(loss);
            net.update_running_stats(&pass);
            adam.update(net.param_slices_mut(), &grads.slices())?;
            loss_sum += loss * chunk.len() as f64;
            seen += chunk.len();
        }
        let train_loss = loss_sum / seen.max(1) as f64;
        let validation_loss = if n_val > 0 {
            let p = net.predict(val_x.view())?;
            let v = cross_entropy(val_y.view(), p.view())?;
            if !v.is_finite() {
                return Err(Error::Diverged(format!("validation loss {v} at epoch {epoch}")));
            }
            Some(v)
        } else {
            None
        };
        adam.config.learning_rate *= hyper.lr_decay;
        curve.push(EpochStats {
            epoch,
            train_loss,
            validation_loss,
        });
        let score = validation_loss.unwrap_or(train_loss);
        if best.as_ref().is_none_or(|(b, _, _)| score < *b) {
            best = Some((score, epoch, net.clone()));
        }
    }
    let (_, best_epoch, network) = best.expect("at least one epoch");
    let provenance = Provenance {
        config: cfg.clone(),
        groups: set.groups.clone(),
        samples: set.len(),
        hyper: *hyper,
        epochs_run: hyper.epochs,
        best_epoch,
        final_loss: curve[best_epoch - 1].train_loss,
        best_validation_loss: curve[best_epoch - 1].validation_loss,
    };
    Ok(TrainingOutcome {
        decoder: TrainedDecoder { network, provenance },
        initial_loss: initial_loss.unwrap_or(f64::NAN),
        curve,
    })
}
