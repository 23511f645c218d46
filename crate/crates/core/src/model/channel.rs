use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Codebook, ModelError, SystemConfig};

/// Constant per-component channel gains over the interleaved 2K layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelGain(Vec<f64>);

impl ChannelGain {
    pub fn new(values: Vec<f64>) -> Result<Self, ModelError> {
        if values.is_empty() || values.len() % 2 != 0 {
            return Err(ModelError::SizeMismatch(format!(
                "gain vector length {} is not 2K",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::Parse("channel gains must be finite".into()));
        }
        Ok(Self(values))
    }

    /// Unit gains on `resources` sub-carriers.
    pub fn ones(resources: usize) -> Self {
        Self(vec![1.0; 2 * resources])
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn resources(&self) -> usize {
        self.0.len() / 2
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|v| v * factor).collect())
    }
}

/// A received frame: 2K interleaved reals and the per-real-component noise variance.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedSignal {
    pub samples: Vec<f64>,
    /// Zero when no noise was applied.
    pub noise_var: f64,
}

impl ReceivedSignal {
    pub fn noiseless(samples: Vec<f64>) -> Self {
        Self {
            samples,
            noise_var: 0.0,
        }
    }
}

pub fn ebn0_db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `SNR = (Eb/N0)·(m·J/K)`.
pub fn ebn0_to_snr(ebn0_linear: f64, cfg: &SystemConfig) -> Result<f64, ModelError> {
    if ebn0_linear.is_nan() || ebn0_linear <= 0.0 {
        return Err(ModelError::NonPositive {
            what: "Eb/N0",
            value: ebn0_linear,
        });
    }
    Ok(ebn0_linear * (cfg.bits_per_symbol * cfg.users) as f64 / cfg.resources as f64)
}

/// Per-real-component noise variance `E[‖ȳ‖²] / (SNR·2K)`.
///
/// The total noise power `E[‖ȳ‖²]/SNR` is spread evenly over the 2K real
/// dimensions. Infinite Eb/N0 gives zero variance.
pub fn noise_variance(signal_power: f64, ebn0_linear: f64, cfg: &SystemConfig) -> Result<f64, ModelError> {
    if signal_power.is_nan() || signal_power <= 0.0 {
        return Err(ModelError::NonPositive {
            what: "signal power",
            value: signal_power,
        });
    }
    let snr = ebn0_to_snr(ebn0_linear, cfg)?;
    if snr.is_infinite() {
        return Ok(0.0);
    }
    Ok(signal_power / (snr * cfg.signal_width() as f64))
}

/// Adds i.i.d. zero-mean Gaussian noise to each real component of `clean`.
///
/// `ebn0_linear = f64::INFINITY` disables the noise and returns `clean` unchanged.
pub fn add_awgn<R: Rng + ?Sized>(
    clean: &[f64],
    ebn0_linear: f64,
    cfg: &SystemConfig,
    signal_power: f64,
    rng: &mut R,
) -> Result<ReceivedSignal, ModelError> {
    if clean.len() != cfg.signal_width() {
        return Err(ModelError::SizeMismatch(format!(
            "signal has {} reals, expected 2K={}",
            clean.len(),
            cfg.signal_width()
        )));
    }
    let var = noise_variance(signal_power, ebn0_linear, cfg)?;
    if var == 0.0 {
        return Ok(ReceivedSignal::noiseless(clean.to_vec()));
    }
    let sd = var.sqrt();
    let samples = clean
        .iter()
        .map(|&x| x + sd * rng.sample::<f64, _>(StandardNormal))
        .collect();
    Ok(ReceivedSignal {
        samples,
        noise_var: var,
    })
}

/// Exact `E[‖ȳ‖²]` under independent, uniformly distributed user symbols.
///
/// Per real component, `E[(Σ_j x_j)²] = Σ_j E[x_j²] + (Σ_j E[x_j])² − Σ_j E[x_j]²`.
pub fn ensemble_power(codebook: &Codebook, gains: &ChannelGain) -> f64 {
    let table = codebook.signal_table(gains);
    let m = codebook.codebook_size() as f64;
    let mut total = 0.0;
    for i in 0..table.width() {
        let (mut second, mut mean_sum, mut mean_sq) = (0.0, 0.0, 0.0);
        for j in 0..table.users() {
            let (mut s1, mut s2) = (0.0, 0.0);
            for s in 0..table.codebook_size() {
                let x = table.point(j, s)[i];
                s1 += x;
                s2 += x * x;
            }
            let mean = s1 / m;
            second += s2 / m;
            mean_sum += mean;
            mean_sq += mean * mean;
        }
        total += second + mean_sum * mean_sum - mean_sq;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use num_complex::Complex64;

    #[test]
    fn snr_conversion_examples() {
        let cfg = SystemConfig::canonical();
        assert!((ebn0_to_snr(1.0, &cfg).unwrap() - 3.0).abs() < 1e-15);
        assert!((ebn0_to_snr(2.0, &cfg).unwrap() - 6.0).abs() < 1e-15);
        let unit = SystemConfig::new(1, 1, 2, 1).unwrap();
        assert_eq!(ebn0_to_snr(0.37, &unit).unwrap(), 0.37);
        assert!(ebn0_to_snr(0.0, &cfg).is_err());
        assert!(ebn0_to_snr(-1.0, &cfg).is_err());
    }

    #[test]
    fn noise_variance_example() {
        // E‖ȳ‖² = 4, SNR = 2 (Eb/N0 = 2/3 for the canonical dims), K = 4.
        let cfg = SystemConfig::canonical();
        let var = noise_variance(4.0, 2.0 / 3.0, &cfg).unwrap();
        assert!((var - 0.25).abs() < 1e-12);
        assert!(noise_variance(0.0, 1.0, &cfg).is_err());
    }

    #[test]
    fn infinite_ebn0_disables_noise() {
        let cfg = SystemConfig::canonical();
        let clean = vec![0.1, -0.2, 0.3, 0.4, 0.0, 1.0, -1.0, 0.5];
        let out = add_awgn(&clean, f64::INFINITY, &cfg, 1.0, &mut seeded(1)).unwrap();
        assert_eq!(out.samples, clean);
        assert_eq!(out.noise_var, 0.0);
    }

    #[test]
    fn ensemble_power_examples() {
        let single = Codebook::new(
            2,
            vec![(vec![0], vec![vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]; 2])],
        )
        .unwrap();
        assert!((ensemble_power(&single, &ChannelGain::ones(2)) - 1.0).abs() < 1e-15);

        let cb = Codebook::reference();
        let p1 = ensemble_power(&cb, &ChannelGain::ones(4));
        let p2 = ensemble_power(&cb, &ChannelGain::ones(4).scaled(2.0));
        assert!((p2 - 4.0 * p1).abs() < 1e-12);
    }

    #[test]
    fn ensemble_power_includes_non_zero_means() {
        // Two users with mean-offset constellations on one resource.
        let user = |shift: f64| {
            (
                vec![0],
                vec![vec![Complex64::new(shift + 1.0, 0.0)], vec![Complex64::new(shift - 1.0, 0.0)]],
            )
        };
        let cb = Codebook::new(1, vec![user(0.5), user(0.25)]).unwrap();
        // Brute force over the four joint symbols.
        let mut brute = 0.0;
        for a in [1.5, -0.5] {
            for b in [1.25, -0.75] {
                let s: f64 = a + b;
                brute += s * s / 4.0;
            }
        }
        assert!((ensemble_power(&cb, &ChannelGain::ones(1)) - brute).abs() < 1e-12);
    }
}
