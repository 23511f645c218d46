use std::path::Path;

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dl::DecoderArch;
use crate::model::{ebn0_db_to_linear, ensemble_power, noise_variance, ChannelGain, Codebook, MappingMask, SystemConfig};
use crate::neuro::{Activation, Checkpoint, ForwardPass, Gradients, LayerSpec, Mode, Network, Parameterized};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderArch {
    pub hidden_layers: usize,
    pub hidden_width: usize,
}

impl Default for EncoderArch {
    /// 4 hidden layers of 32 nodes.
    fn default() -> Self {
        Self {
            hidden_layers: 4,
            hidden_width: 32,
        }
    }
}

impl EncoderArch {
    pub fn layer_specs(&self, output_width: usize) -> Vec<LayerSpec> {
        let mut specs = LayerSpec::hidden_stack(self.hidden_layers, self.hidden_width);
        specs.push(LayerSpec::new(output_width, Activation::Tanh, false));
        specs
    }
}

/// Largest joint symbol space [`Autoencoder::structure_report`] enumerates.
const MAX_ROUND_TRIP: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    /// Every off-mask component is `+0.0` and every on-mask one is the raw encoder output.
    pub mask_exact: bool,
    pub max_abs_component: f64,
    pub noiseless_bit_errors: u64,
    pub noiseless_bits: u64,
}

impl StructureReport {
    pub fn within_bound(&self) -> bool {
        self.max_abs_component <= 1.0
    }
}

/// Per-user encoders with their masks, the channel gain, and the shared decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder {
    pub config: SystemConfig,
    pub masks: Vec<MappingMask>,
    pub gains: ChannelGain,
    pub encoders: Vec<Network>,
    pub decoder: Network,
}

/// Fresh Xavier-initialised autoencoder. `dec_arch` widths must be 2K → mJ.
pub fn build_autoencoder<R: Rng + ?Sized>(
    config: &SystemConfig,
    masks: Vec<MappingMask>,
    enc_arch: &EncoderArch,
    dec_arch: &DecoderArch,
    gains: ChannelGain,
    rng: &mut R,
) -> Result<Autoencoder> {
    let width = config.signal_width();
    if masks.len() != config.users {
        return Err(Error::InvalidArgument(format!("{} masks for {} users", masks.len(), config.users)));
    }
    if masks.iter().any(|m| m.len() != width || m.ones() == 0) {
        return Err(Error::InvalidArgument(format!("every mask needs length 2K={width} and a non-empty support")));
    }
    if gains.len() != width {
        return Err(Error::InvalidArgument(format!("gain has {} entries, expected {width}", gains.len())));
    }
    if dec_arch.input_width != width || dec_arch.output_width != config.frame_bits() {
        return Err(Error::InvalidArgument("decoder architecture must map 2K inputs to mJ outputs".into()));
    }
    let specs = enc_arch.layer_specs(width);
    let encoders = (0..config.users)
        .map(|_| Network::new(config.bits_per_symbol, &specs, rng))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let decoder = dec_arch.build(rng)?;
    Ok(Autoencoder {
        config: config.clone(),
        masks,
        gains,
        encoders,
        decoder,
    })
}

pub enum NoiseSource<'a, R: Rng + ?Sized> {
    Disabled,
    /// Fresh AWGN at the given Eb/N0, calibrated on the batch (train mode) or
    /// the extracted codebook (infer mode).
    Awgn { ebn0_db: f64, rng: &'a mut R },
    /// A frozen noise matrix, added as is.
    Fixed(Array2<f64>),
}

#[derive(Debug, Clone)]
pub struct AeForward {
    pub encoder_passes: Vec<ForwardPass>,
    /// Gain-weighted superposition `h ⊙ Σ_j s_j ⊙ e_j(b_j)`.
    pub clean: Array2<f64>,
    pub noise: Array2<f64>,
    pub noise_var: f64,
    pub decoder_pass: ForwardPass,
}

impl AeForward {
    pub fn noisy(&self) -> &Array2<f64> {
        &self.decoder_pass.activations[0]
    }

    pub fn probabilities(&self) -> &Array2<f64> {
        self.decoder_pass.output()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AeGradients {
    pub encoders: Vec<Gradients>,
    pub decoder: Gradients,
}

impl AeGradients {
    /// In the order of [`Parameterized::param_slices_mut`] on the autoencoder.
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = self.encoders.iter().flat_map(Gradients::slices).collect();
        out.extend(self.decoder.slices());
        out
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.slices().into_iter().map(<[f64]>::to_vec).collect()
    }
}

/// Zeroes the columns outside `mask`. Masked entries are `+0.0`, never `-0.0`.
fn apply_mask(mut x: Array2<f64>, mask: &MappingMask) -> Array2<f64> {
    for (mut col, &b) in x.columns_mut().into_iter().zip(mask.bits()) {
        if b == 0 {
            col.fill(0.0);
        }
    }
    x
}

impl Autoencoder {
    pub fn users(&self) -> usize {
        self.config.users
    }

    /// Post-mask encoder outputs for one user's `batch × m` bit matrix.
    fn encode_user(&self, j: usize, bits: ArrayView2<f64>, mode: Mode) -> Result<(ForwardPass, Array2<f64>)> {
        let pass = self.encoders[j].forward(bits, mode)?;
        let masked = apply_mask(pass.output().clone(), &self.masks[j]);
        Ok((pass, masked))
    }

    /// Reads the encoders out as a codebook (infer mode, all M inputs per user).
    pub fn extract_codebook(&self) -> Result<Codebook> {
        let (m, big_m, k) = (self.config.bits_per_symbol, self.config.codebook_size, self.config.resources);
        let mut patterns = Array2::zeros((big_m, m));
        for s in 0..big_m {
            let mut bits = vec![0u8; m];
            crate::model::index_to_bits(s, &mut bits);
            for (i, &b) in bits.iter().enumerate() {
                patterns[[s, i]] = f64::from(b);
            }
        }
        let mut users = Vec::with_capacity(self.users());
        for j in 0..self.users() {
            let (_, out) = self.encode_user(j, patterns.view(), Mode::Infer)?;
            let codewords = out
                .rows()
                .into_iter()
                .map(|row| (0..k).map(|r| Complex64::new(row[2 * r], row[2 * r + 1])).collect())
                .collect();
            users.push((self.masks[j].resources(), codewords));
        }
        Ok(Codebook::new(k, users)?)
    }

    /// Mask exactness, the component bound and the noiseless round trip over
    /// every joint symbol.
    pub fn structure_report(&self) -> Result<StructureReport> {
        let (m, big_m, users) = (self.config.bits_per_symbol, self.config.codebook_size, self.users());
        let joint = self.config.joint_hypotheses();
        if joint > MAX_ROUND_TRIP {
            return Err(Error::InvalidArgument(format!("{joint} joint symbols are too many to enumerate")));
        }
        let mut patterns = Array2::zeros((big_m, m));
        for s in 0..big_m {
            for i in 0..m {
                patterns[[s, i]] = ((s >> (m - 1 - i)) & 1) as f64;
            }
        }
        let (mut mask_exact, mut max_abs) = (true, 0.0f64);
        for j in 0..users {
            let raw = self.encoders[j].predict(patterns.view())?;
            let (_, out) = self.encode_user(j, patterns.view(), Mode::Infer)?;
            for (row, raw_row) in out.rows().into_iter().zip(raw.rows()) {
                for (i, (&v, &r)) in row.iter().zip(raw_row).enumerate() {
                    max_abs = max_abs.max(v.abs());
                    let on = self.masks[j].bits()[i] == 1;
                    mask_exact &= if on { v == r } else { v.to_bits() == 0 };
                }
            }
        }
        let width = self.config.frame_bits();
        let bits = Array2::from_shape_fn((joint, width), |(r, c)| ((r >> (width - 1 - c)) & 1) as f64);
        let fwd = ae_forward::<crate::rng::SimRng>(self, bits.view(), NoiseSource::Disabled, Mode::Infer)?;
        let errors = fwd
            .probabilities()
            .iter()
            .zip(bits.iter())
            .filter(|(&p, &b)| f64::from(crate::dl::hard_decision(p)) != b)
            .count() as u64;
        Ok(StructureReport {
            mask_exact,
            max_abs_component: max_abs,
            noiseless_bit_errors: errors,
            noiseless_bits: (joint * width) as u64,
        })
    }

    /// Backward pass of the summed cross-entropy through decoder, frozen noise,
    /// gain, masks and encoders.
    pub fn loss_and_backward(&self, fwd: &AeForward, targets: ArrayView2<f64>) -> Result<(f64, AeGradients)> {
        let (loss, decoder, d_noisy) = self.decoder.loss_and_backward(&fwd.decoder_pass, targets)?;
        let d_sum = d_noisy * &Array1::from(self.gains.values().to_vec());
        let mut encoders = Vec::with_capacity(self.users());
        for (j, pass) in fwd.encoder_passes.iter().enumerate() {
            let d_e = apply_mask(d_sum.clone(), &self.masks[j]);
            let (g, _) = self.encoders[j].backward(pass, d_e.view())?;
            encoders.push(g);
        }
        Ok((loss, AeGradients { encoders, decoder }))
    }

    pub fn update_running_stats(&mut self, fwd: &AeForward) {
        for (enc, pass) in self.encoders.iter_mut().zip(&fwd.encoder_passes) {
            enc.update_running_stats(pass);
        }
        self.decoder.update_running_stats(&fwd.decoder_pass);
    }
}

const CHECKPOINT_KIND: &str = "autoencoder";

impl Autoencoder {
    /// Sections `encoder0..encoder{J-1}` and `decoder`; the header carries the
    /// configuration, masks, gains and caller-supplied provenance.
    pub fn to_checkpoint(&self, provenance: serde_json::Value) -> Checkpoint {
        let masks: Vec<&[u8]> = self.masks.iter().map(MappingMask::bits).collect();
        let header = serde_json::json!({
            "kind": CHECKPOINT_KIND,
            "config": self.config,
            "masks": masks,
            "gains": self.gains.values(),
            "provenance": provenance,
        });
        let mut ck = Checkpoint::new(header);
        for (j, e) in self.encoders.iter().enumerate() {
            ck.insert(format!("encoder{j}"), e);
        }
        ck.insert("decoder", &self.decoder);
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let h = &ck.header;
        if h.get("kind").and_then(|k| k.as_str()) != Some(CHECKPOINT_KIND) {
            return Err(Error::InvalidArgument("checkpoint does not hold an autoencoder".into()));
        }
        let bad = |what: &str, e: serde_json::Error| Error::InvalidArgument(format!("autoencoder {what}: {e}"));
        let config: SystemConfig = serde_json::from_value(h["config"].clone()).map_err(|e| bad("config", e))?;
        let mask_bits: Vec<Vec<u8>> = serde_json::from_value(h["masks"].clone()).map_err(|e| bad("masks", e))?;
        let gains: Vec<f64> = serde_json::from_value(h["gains"].clone()).map_err(|e| bad("gains", e))?;
        let masks = mask_bits
            .into_iter()
            .map(MappingMask::from_bits)
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let encoders = (0..config.users)
            .map(|j| ck.network(&format!("encoder{j}")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let decoder = ck.network("decoder")?;
        let width = config.signal_width();
        let consistent = masks.len() == config.users
            && masks.iter().all(|m| m.len() == width)
            && gains.len() == width
            && encoders
                .iter()
                .all(|e| e.input_width() == config.bits_per_symbol && e.output_width() == width)
            && decoder.input_width() == width
            && decoder.output_width() == config.frame_bits();
        if !consistent {
            return Err(Error::InvalidArgument("autoencoder checkpoint parts have inconsistent widths".into()));
        }
        Ok(Self {
            config,
            masks,
            gains: ChannelGain::new(gains)?,
            encoders,
            decoder,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>, provenance: serde_json::Value) -> Result<()> {
        self.to_checkpoint(provenance).save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }
}

/// Encode every user, mask, superpose, apply gain, add noise, decode.
///
/// `bits` is `batch × mJ`, user-major as in the frame layout.
pub fn ae_forward<R: Rng + ?Sized>(
    ae: &Autoencoder,
    bits: ArrayView2<f64>,
    noise: NoiseSource<'_, R>,
    mode: Mode,
) -> Result<AeForward> {
    let (m, width) = (ae.config.bits_per_symbol, ae.config.signal_width());
    if bits.ncols() != ae.config.frame_bits() {
        return Err(Error::InvalidArgument(format!(
            "bit batch has {} columns, expected mJ={}",
            bits.ncols(),
            ae.config.frame_bits()
        )));
    }
    let rows = bits.nrows();
    let mut sum = Array2::<f64>::zeros((rows, width));
    let mut encoder_passes = Vec::with_capacity(ae.users());
    for j in 0..ae.users() {
        let (pass, masked) = ae.encode_user(j, bits.slice(s![.., j * m..(j + 1) * m]), mode)?;
        sum += &masked;
        encoder_passes.push(pass);
    }
    let clean = sum * &Array1::from(ae.gains.values().to_vec());
    let (noise, noise_var) = match noise {
        NoiseSource::Disabled => (Array2::zeros((rows, width)), 0.0),
        NoiseSource::Fixed(n) => {
            if n.dim() != clean.dim() {
                return Err(Error::InvalidArgument(format!("noise {:?} vs signal {:?}", n.dim(), clean.dim())));
            }
            (n, f64::NAN)
        }
        NoiseSource::Awgn { ebn0_db, rng } => {
            let power = match mode {
                Mode::Train => clean.map_axis(Axis(1), |r| r.dot(&r)).mean().unwrap_or(0.0),
                Mode::Infer => ensemble_power(&ae.extract_codebook()?, &ae.gains),
            };
            let var = noise_variance(power, ebn0_db_to_linear(ebn0_db), &ae.config)?;
            let sd = var.sqrt();
            let n = Array2::from_shape_simple_fn((rows, width), || sd * rng.sample::<f64, _>(StandardNormal));
            (n, var)
        }
    };
    let noisy = &clean + &noise;
    let decoder_pass = ae.decoder.forward(noisy.view(), mode)?;
    Ok(AeForward {
        encoder_passes,
        clean,
        noise,
        noise_var,
        decoder_pass,
    })
}

impl Parameterized for Autoencoder {
    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = self.encoders.iter_mut().flat_map(|e| e.param_slices_mut()).collect();
        out.extend(self.decoder.param_slices_mut());
        out
    }

    fn param_labels(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (j, e) in self.encoders.iter().enumerate() {
            out.extend(e.param_labels().into_iter().map(|l| format!("encoder{j}.{l}")));
        }
        out.extend(self.decoder.param_labels().into_iter().map(|l| format!("decoder.{l}")));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ae::make_dcma_masks;
    use crate::model::{derive_masks, FactorGraph};
    use crate::neuro::{compare_gradients, cross_entropy, finite_difference};
    use crate::rng::{seeded, SimRng};

    fn canonical_ae(seed: u64, masks: Vec<MappingMask>) -> Autoencoder {
        let cfg = SystemConfig::canonical();
        build_autoencoder(
            &cfg,
            masks,
            &EncoderArch::default(),
            &DecoderArch::for_config(&cfg).with_hidden(5, 48),
            ChannelGain::ones(4),
            &mut seeded(seed),
        )
        .unwrap()
    }

    fn all_patterns() -> Array2<f64> {
        Array2::from_shape_fn((4096, 12), |(r, c)| ((r >> (11 - c)) & 1) as f64)
    }

    fn random_bits(rows: usize, seed: u64) -> Array2<f64> {
        let mut rng = seeded(seed);
        Array2::from_shape_simple_fn((rows, 12), || f64::from(rng.random_range(0..2u8)))
    }

    #[test]
    fn default_shapes() {
        let ae = canonical_ae(0, derive_masks(&FactorGraph::canonical()));
        assert_eq!(ae.encoders.len(), 6);
        for e in &ae.encoders {
            let specs = e.architecture();
            assert_eq!(specs.len(), 5);
            assert!(specs[..4].iter().all(|s| s.width == 32 && s.batch_norm));
            assert_eq!(specs[4], LayerSpec::new(8, Activation::Tanh, false));
        }
        assert_eq!(DecoderArch::of_network(&ae.decoder).unwrap().hidden_layers, 5);
    }

    #[test]
    fn rejects_inconsistent_parts() {
        let cfg = SystemConfig::canonical();
        let masks = derive_masks(&FactorGraph::canonical());
        let dec = DecoderArch::for_config(&cfg);
        let mut rng = seeded(0);
        assert!(build_autoencoder(&cfg, masks[..5].to_vec(), &EncoderArch::default(), &dec, ChannelGain::ones(4), &mut rng).is_err());
        assert!(build_autoencoder(&cfg, masks.clone(), &EncoderArch::default(), &dec, ChannelGain::ones(3), &mut rng).is_err());
        let bad = DecoderArch { input_width: 6, ..dec };
        assert!(build_autoencoder(&cfg, masks, &EncoderArch::default(), &bad, ChannelGain::ones(4), &mut rng).is_err());
    }

    #[test]
    fn untrained_noiseless_outputs_are_probabilities() {
        let ae = canonical_ae(1, derive_masks(&FactorGraph::canonical()));
        let bits = random_bits(64, 2);
        let fwd = ae_forward::<SimRng>(&ae, bits.view(), NoiseSource::Disabled, Mode::Train).unwrap();
        assert!(fwd.probabilities().iter().all(|&p| p > 0.0 && p < 1.0));
        assert_eq!(fwd.noisy(), &fwd.clean);
    }

    #[test]
    fn masked_positions_are_structurally_zero() {
        let graph = FactorGraph::canonical();
        let ae = canonical_ae(3, derive_masks(&graph));
        let bits = random_bits(32, 4);
        for j in 0..6 {
            let (_, out) = ae.encode_user(j, bits.slice(s![.., 2 * j..2 * j + 2]), Mode::Train).unwrap();
            for row in out.rows() {
                assert!(row.iter().filter(|&&v| v != 0.0).count() <= 4);
                for (i, &v) in row.iter().enumerate() {
                    if ae.masks[j].bits()[i] == 0 {
                        assert_eq!(v.to_bits(), 0f64.to_bits());
                    }
                    assert!(v.abs() <= 1.0);
                }
            }
        }
        // At most d_f = 3 users contribute to any resource of the sum.
        for k in 0..4 {
            assert_eq!(graph.users_on(k).len(), 3);
        }
    }

    #[test]
    fn single_active_user_changes_only_its_support() {
        let masks = derive_masks(&FactorGraph::canonical());
        let ae = canonical_ae(5, masks.clone());
        let others = random_bits(1, 6);
        for j in 0..6 {
            let mut bits = Array2::zeros((4, 12));
            for r in 0..4 {
                bits.row_mut(r).assign(&others.row(0));
                bits[[r, 2 * j]] = (r >> 1) as f64;
                bits[[r, 2 * j + 1]] = (r & 1) as f64;
            }
            let fwd = ae_forward::<SimRng>(&ae, bits.view(), NoiseSource::Disabled, Mode::Infer).unwrap();
            for i in 0..8 {
                let col = fwd.clean.column(i);
                let constant = col.iter().all(|&v| v == col[0]);
                if masks[j].bits()[i] == 0 {
                    assert!(constant, "user {j} leaks into component {i}");
                } else {
                    assert!(!constant, "user {j} should modulate component {i}");
                }
            }
        }
    }

    #[test]
    fn extraction_matches_noiseless_infer_forward() {
        for masks in [
            derive_masks(&FactorGraph::canonical()),
            make_dcma_masks(&FactorGraph::canonical(), 1.0).unwrap().masks,
        ] {
            let ae = canonical_ae(6, masks.clone());
            let cb = ae.extract_codebook().unwrap();
            for (j, u) in cb.iter().enumerate() {
                assert_eq!(u.support(), masks[j].resources().as_slice());
                assert!(u.codewords().iter().flatten().all(|c| c.re.abs() <= 1.0 && c.im.abs() <= 1.0));
            }
            let bits = all_patterns();
            let fwd = ae_forward::<SimRng>(&ae, bits.view(), NoiseSource::Disabled, Mode::Infer).unwrap();
            let table = cb.signal_table(&ae.gains);
            let mut y = vec![0.0; 8];
            let mut rows = Vec::new();
            for r in 0..4096 {
                let syms: Vec<usize> = (0..6).map(|j| (r >> (2 * (5 - j))) & 3).collect();
                table.superpose_into(&syms, &mut y);
                for (a, b) in y.iter().zip(fwd.clean.row(r)) {
                    assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0));
                }
                rows.extend_from_slice(&y);
            }
            let x = Array2::from_shape_vec((4096, 8), rows).unwrap();
            let p = ae.decoder.predict(x.view()).unwrap();
            let diff = (&p - fwd.probabilities()).mapv(f64::abs).fold(0.0f64, |a, &b| a.max(b));
            assert!(diff < 1e-14, "{diff}");
        }
    }

    #[test]
    fn end_to_end_gradient_check_with_frozen_noise() {
        let cfg = SystemConfig::canonical();
        let mut ae = build_autoencoder(
            &cfg,
            derive_masks(&FactorGraph::canonical()),
            &EncoderArch {
                hidden_layers: 2,
                hidden_width: 6,
            },
            &DecoderArch::for_config(&cfg).with_hidden(2, 7),
            ChannelGain::new(vec![1.0, 0.8, 1.2, 0.9, 1.1, 1.0, 0.7, 1.3]).unwrap(),
            &mut seeded(8),
        )
        .unwrap();
        let bits = random_bits(10, 9);
        let mut rng = seeded(10);
        let sampled = ae_forward(&ae, bits.view(), NoiseSource::Awgn { ebn0_db: 5.0, rng: &mut rng }, Mode::Train).unwrap();
        assert!(sampled.noise_var > 0.0);
        let frozen = sampled.noise.clone();
        let (_, grads) = ae.loss_and_backward(&sampled, bits.view()).unwrap();
        let numeric = finite_difference(&mut ae, 1e-5, |a| {
            let f = ae_forward::<SimRng>(a, bits.view(), NoiseSource::Fixed(frozen.clone()), Mode::Train).unwrap();
            cross_entropy(bits.view(), f.probabilities().view()).unwrap()
        });
        let report = compare_gradients(&grads.to_vecs(), &numeric, &ae.param_labels());
        assert!(report.max_rel_error < 1e-4, "{report:?}");
        assert!(report.checked > 500);
    }

    #[test]
    fn infer_noise_uses_codebook_power() {
        let ae = canonical_ae(11, derive_masks(&FactorGraph::canonical()));
        let bits = random_bits(8, 12);
        let mut rng = seeded(13);
        let fwd = ae_forward(&ae, bits.view(), NoiseSource::Awgn { ebn0_db: 5.0, rng: &mut rng }, Mode::Infer).unwrap();
        let power = ensemble_power(&ae.extract_codebook().unwrap(), &ae.gains);
        let want = noise_variance(power, ebn0_db_to_linear(5.0), &ae.config).unwrap();
        assert!((fwd.noise_var - want).abs() < 1e-15);
    }

    #[test]
    fn checkpoint_round_trip() {
        let ae = canonical_ae(14, make_dcma_masks(&FactorGraph::canonical(), 1.0).unwrap().masks);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ae.json");
        ae.save(&path, serde_json::json!({"seed": 14})).unwrap();
        let back = Autoencoder::load(&path).unwrap();
        assert_eq!(back, ae);
        assert!(crate::dl::TrainedDecoder::load(&path).is_err());
    }

    #[test]
    fn structure_report_on_fresh_model() {
        let ae = canonical_ae(5, make_dcma_masks(&FactorGraph::canonical(), 0.5).unwrap().masks);
        let r = ae.structure_report().unwrap();
        assert!(r.mask_exact && r.within_bound());
        assert_eq!(r.noiseless_bits, 4096 * 12);
        assert!(r.noiseless_bit_errors > 0, "an untrained decoder should not be perfect");
    }
}
