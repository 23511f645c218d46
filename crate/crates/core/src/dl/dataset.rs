use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::{ebn0_db_to_linear, ensemble_power, generate_frames, noise_variance, ChannelGain, Codebook};
use crate::{Error, Result};

/// One block of samples drawn at a single Eb/N0. `f64::INFINITY` means noiseless.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingGroup {
    pub ebn0_db: f64,
    pub samples: usize,
}

impl TrainingGroup {
    pub fn new(ebn0_db: f64, samples: usize) -> Self {
        Self { ebn0_db, samples }
    }

    /// Groups at each of `ebn0_db` with `samples` frames apiece.
    pub fn uniform(ebn0_db: &[f64], samples: usize) -> Vec<Self> {
        ebn0_db.iter().map(|&e| Self::new(e, samples)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    /// `samples × 2K` noisy observations.
    pub inputs: Array2<f64>,
    /// `samples × mJ` transmitted bits as 0.0 / 1.0.
    pub labels: Array2<f64>,
    pub groups: Vec<TrainingGroup>,
}

const DATASET_MAGIC: &[u8; 8] = b"SCMADS01";

impl TrainingSet {
    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Binary export, all integers and floats little-endian:
    ///
    /// ```text
    /// magic    8 bytes  "SCMADS01"
    /// rows     u64
    /// in_w     u32      (2K)
    /// out_w    u32      (mJ)
    /// groups   u32, then per group: ebn0_db f64, samples u64
    /// rows × (in_w f64 inputs, out_w u8 labels)
    /// ```
    pub fn write_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::with_capacity(32 + self.len() * (8 * self.inputs.ncols() + self.labels.ncols()));
        buf.extend_from_slice(DATASET_MAGIC);
        buf.extend_from_slice(&(self.len() as u64).to_le_bytes());
        buf.extend_from_slice(&(self.inputs.ncols() as u32).to_le_bytes());
        buf.extend_from_slice(&(self.labels.ncols() as u32).to_le_bytes());
        buf.extend_from_slice(&(self.groups.len() as u32).to_le_bytes());
        for g in &self.groups {
            buf.extend_from_slice(&g.ebn0_db.to_le_bytes());
            buf.extend_from_slice(&(g.samples as u64).to_le_bytes());
        }
        for (x, y) in self.inputs.rows().into_iter().zip(self.labels.rows()) {
            for v in x {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            buf.extend(y.iter().map(|&b| b as u8));
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(&buf))
            .map_err(|e| Error::io(path, e))
    }

    pub fn read_binary(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut data = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut data))
            .map_err(|e| Error::io(path, e))?;
        let bad = |what: &str| Error::InvalidArgument(format!("{}: {what}", path.display()));
        let mut cur = data.as_slice();
        let mut take = |n: usize| -> Result<&[u8]> {
            if cur.len() < n {
                return Err(bad("truncated dataset"));
            }
            let (head, tail) = cur.split_at(n);
            cur = tail;
            Ok(head)
        };
        if take(8)? != DATASET_MAGIC {
            return Err(bad("not a dataset file"));
        }
        let rows = u64::from_le_bytes(take(8)?.try_into().expect("8 bytes")) as usize;
        let in_w = u32::from_le_bytes(take(4)?.try_into().expect("4 bytes")) as usize;
        let out_w = u32::from_le_bytes(take(4)?.try_into().expect("4 bytes")) as usize;
        let n_groups = u32::from_le_bytes(take(4)?.try_into().expect("4 bytes")) as usize;
        let mut groups = Vec::with_capacity(n_groups);
        for _ in 0..n_groups {
            let e = f64::from_le_bytes(take(8)?.try_into().expect("8 bytes"));
            let s = u64::from_le_bytes(take(8)?.try_into().expect("8 bytes")) as usize;
            groups.push(TrainingGroup::new(e, s));
        }
        let mut inputs = Vec::with_capacity(rows * in_w);
        let mut labels = Vec::with_capacity(rows * out_w);
        for _ in 0..rows {
            for chunk in take(8 * in_w)?.chunks_exact(8) {
                inputs.push(f64::from_le_bytes(chunk.try_into().expect("8 bytes")));
            }
            labels.extend(take(out_w)?.iter().map(|&b| f64::from(b)));
        }
        if !cur.is_empty() {
            return Err(bad("trailing bytes"));
        }
        Ok(Self {
            inputs: Array2::from_shape_vec((rows, in_w), inputs).expect("sized above"),
            labels: Array2::from_shape_vec((rows, out_w), labels).expect("sized above"),
            groups,
        })
    }
}

/// Uniform random bits → encode → superpose → AWGN, one block per group.
/// Noise is calibrated against the codebook's ensemble power.
pub fn generate_training_set<R: Rng + ?Sized>(
    codebook: &Codebook,
    gains: &ChannelGain,
    groups: &[TrainingGroup],
    rng: &mut R,
) -> Result<TrainingSet> {
    let cfg = codebook.system_config()?;
    if groups.is_empty() || groups.iter().any(|g| g.samples == 0) {
        return Err(Error::InvalidArgument("every training group needs at least one sample".into()));
    }
    let power = ensemble_power(codebook, gains);
    let table = codebook.signal_table(gains);
    let total: usize = groups.iter().map(|g| g.samples).sum();
    let (w, b) = (cfg.signal_width(), cfg.frame_bits());
    let mut inputs = Vec::with_capacity(total * w);
    let mut labels = Vec::with_capacity(total * b);
    for g in groups {
        let var = noise_variance(power, ebn0_db_to_linear(g.ebn0_db), &cfg)?;
        let frames = generate_frames(&table, g.samples, var, rng);
        inputs.extend_from_slice(&frames.received);
        labels.extend(frames.bits.iter().map(|&v| f64::from(v)));
    }
    Ok(TrainingSet {
        inputs: Array2::from_shape_vec((total, w), inputs).expect("sized above"),
        labels: Array2::from_shape_vec((total, b), labels).expect("sized above"),
        groups: groups.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::MapDetector;
    use crate::model::bits_to_index;
    use crate::rng::seeded;

    #[test]
    fn paper_sized_group_table() {
        let groups = TrainingGroup::uniform(&[2.0, 3.0, 4.0, 5.0, 6.0], 500_000);
        assert_eq!(groups.iter().map(|g| g.samples).sum::<usize>(), 2_500_000);
    }

    #[test]
    fn noiseless_set_is_map_decodable() {
        let cb = Codebook::reference();
        let gains = ChannelGain::ones(4);
        let set = generate_training_set(&cb, &gains, &[TrainingGroup::new(f64::INFINITY, 300)], &mut seeded(4)).unwrap();
        let map = MapDetector::new(&cb, &gains, 1 << 20).unwrap();
        for (x, y) in set.inputs.rows().into_iter().zip(set.labels.rows()) {
            let syms = map.detect_symbols(x.as_slice().unwrap()).unwrap();
            let bits: Vec<u8> = y.iter().map(|&v| v as u8).collect();
            for (j, &s) in syms.iter().enumerate() {
                assert_eq!(s, bits_to_index(&bits[2 * j..2 * j + 2]));
            }
        }
    }

    #[test]
    fn label_marginals_are_fair() {
        let cb = Codebook::reference();
        let n = 1_000_000;
        let set = generate_training_set(&cb, &ChannelGain::ones(4), &[TrainingGroup::new(4.0, n)], &mut seeded(7)).unwrap();
        let sigma = (0.25 / n as f64).sqrt();
        let mut chi2 = 0.0;
        for col in set.labels.columns() {
            let z = (col.sum() / n as f64 - 0.5) / sigma;
            // 12 columns at 3σ: family-wise false alarm about 3%.
            assert!(z.abs() < 3.0, "z = {z}");
            chi2 += z * z;
        }
        // χ²(12) upper 0.1% point.
        assert!(chi2 < 32.91, "chi2 = {chi2}");
        assert!(set.labels.iter().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn rejects_bad_groups() {
        let cb = Codebook::reference();
        let g = ChannelGain::ones(4);
        assert!(generate_training_set(&cb, &g, &[], &mut seeded(0)).is_err());
        assert!(generate_training_set(&cb, &g, &[TrainingGroup::new(3.0, 0)], &mut seeded(0)).is_err());
        assert!(generate_training_set(&cb, &g, &[TrainingGroup::new(f64::NAN, 5)], &mut seeded(0)).is_err());
    }

    #[test]
    fn binary_round_trip() {
        let cb = Codebook::reference();
        let set = generate_training_set(
            &cb,
            &ChannelGain::ones(4),
            &TrainingGroup::uniform(&[1.0, f64::INFINITY], 37),
            &mut seeded(6),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("set.bin");
        set.write_binary(&path).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 8 + 8 + 4 + 4 + 4 + 2 * 16 + 74 * (64 + 12));
        assert_eq!(TrainingSet::read_binary(&path).unwrap(), set);
        std::fs::write(&path, b"SCMADS01\x01").unwrap();
        assert!(TrainingSet::read_binary(&path).is_err());
    }
}
