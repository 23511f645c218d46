use std::path::PathBuf;
use std::time::Instant;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::ae::Autoencoder;
use crate::detect::{LogMpaDetector, LogMpaOptions, MapDetector, OperationCount, DEFAULT_MAP_GUARD};
use crate::dl::{hard_decision, TrainedDecoder};
use crate::model::{
    ebn0_db_to_linear, ensemble_power, generate_frames, index_to_bits, load_codebook, noise_variance, ChannelGain, Codebook,
    FrameBatch, SystemConfig,
};
use crate::neuro::Network;
use crate::rng::derived;
use crate::{Error, Result};

pub const SWEEP_SCHEMA_VERSION: u32 = 1;
pub const SWEEP_CSV_HEADER: &str = "ebn0_db,frames,bit_err,sym_err,ber,ser,ci95,ns_per_frame";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum DetectorSpec {
    Map,
    LogMpa { iterations: usize },
    DlDecoder { checkpoint: PathBuf },
    /// The autoencoder's own decoder; frames are drawn from its extracted codebook.
    AeDecoder { checkpoint: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum CodebookSource {
    Reference,
    File { path: PathBuf },
    /// Codebook read out of a trained autoencoder checkpoint.
    Learned { checkpoint: PathBuf },
}

impl CodebookSource {
    pub fn load(&self) -> Result<Codebook> {
        match self {
            Self::Reference => Ok(Codebook::reference()),
            Self::File { path } => load_codebook(path),
            Self::Learned { checkpoint } => Autoencoder::load(checkpoint)?.extract_codebook(),
        }
    }
}

/// Stop a grid point once `min_bit_errors` are seen (after at least `min_frames`),
/// or at `max_frames` regardless.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StoppingRule {
    pub min_bit_errors: u64,
    pub min_frames: u64,
    pub max_frames: u64,
    /// Frames generated per Monte-Carlo batch; each batch has its own derived seed.
    pub batch_frames: usize,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            min_bit_errors: 100,
            min_frames: 1000,
            max_frames: 1_000_000,
            batch_frames: 1000,
        }
    }
}

impl StoppingRule {
    pub fn fixed(frames: u64, batch_frames: usize) -> Self {
        Self {
            min_bit_errors: u64::MAX,
            min_frames: frames,
            max_frames: frames,
            batch_frames,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub detector: DetectorSpec,
    pub codebook: CodebookSource,
    pub gains: Option<Vec<f64>>,
    pub ebn0_db: Vec<f64>,
    pub stop: StoppingRule,
    pub seed: u64,
    /// Record wall time per frame. Off by default so results are byte-reproducible.
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub ebn0_db: f64,
    pub frames: u64,
    pub bit_errors: u64,
    pub symbol_errors: u64,
    pub ber: f64,
    pub ser: f64,
    /// Normal-approximation 95% half-width on the BER.
    pub ci95: f64,
    pub ns_per_frame: f64,
    /// Per-frame operation count for detectors that report one.
    pub ops: Option<OperationCount>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub schema_version: u32,
    pub detector: String,
    pub config: SystemConfig,
    /// Ensemble power the noise is calibrated against (per codebook, so comparisons are power-fair).
    pub signal_power: f64,
    pub seed: u64,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SWEEP_CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{:e},{:e},{:e},{}\n",
                p.ebn0_db, p.frames, p.bit_errors, p.symbol_errors, p.ber, p.ser, p.ci95, p.ns_per_frame
            ));
        }
        out
    }

    /// `SER ≥ BER ≥ SER/m` and the totals behind them.
    pub fn check_identities(&self) -> Result<()> {
        let m = self.config.bits_per_symbol as f64;
        for p in &self.points {
            let bits = p.frames * self.config.frame_bits() as u64;
            let syms = p.frames * self.config.users as u64;
            let ok = p.ber == p.bit_errors as f64 / bits as f64
                && p.ser == p.symbol_errors as f64 / syms as f64
                && p.ser >= p.ber
                && p.ber * m >= p.ser * (1.0 - 1e-12);
            if !ok {
                return Err(Error::InvalidArgument(format!("counting identity violated at {} dB: {p:?}", p.ebn0_db)));
            }
        }
        Ok(())
    }
}

/// Parses `"0:2:16"` (start:step:stop, inclusive) or a comma list. `inf` disables noise.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidArgument(format!("bad Eb/N0 grid `{text}`"));
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let grid = if text.contains(':') {
        let parts: Vec<f64> = text.split(':').map(parse).collect::<Result<_>>()?;
        let [start, step, stop] = parts[..] else { return Err(bad()) };
        if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
            return Err(bad());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| start + i as f64 * step).collect()
    } else {
        text.split(',').map(parse).collect::<Result<Vec<_>>>()?
    };
    validate_grid(&grid)?;
    Ok(grid)
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|v| v.is_nan()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(format!("Eb/N0 grid must be non-empty and strictly increasing: {grid:?}")));
    }
    Ok(())
}

/// Bit and symbol error counts between two `frames × mJ` bit arrays.
pub fn count_errors(truth: &[u8], decided: &[u8], bits_per_symbol: usize) -> (u64, u64) {
    let mut bit_errors = 0;
    let mut symbol_errors = 0;
    for (t, d) in truth.chunks(bits_per_symbol).zip(decided.chunks(bits_per_symbol)) {
        let wrong = t.iter().zip(d).filter(|(a, b)| a != b).count() as u64;
        bit_errors += wrong;
        symbol_errors += u64::from(wrong > 0);
    }
    (bit_errors, symbol_errors)
}

/// A ready-to-run detector.
pub enum Detector {
    Map(MapDetector),
    LogMpa(LogMpaDetector),
    Network { label: String, network: Network },
}

impl Detector {
    pub fn label(&self) -> String {
        match self {
            Self::Map(_) => "map".into(),
            Self::LogMpa(d) => format!("logmpa{}", d.options().iterations),
            Self::Network { label, .. } => label.clone(),
        }
    }

    /// Hard bit decisions for every frame of `batch`, plus the per-frame operation count if tracked.
    pub fn decide(&self, batch: &FrameBatch, cfg: &SystemConfig) -> Result<(Vec<u8>, Option<OperationCount>)> {
        let (m, users) = (cfg.bits_per_symbol, cfg.users);
        let mut bits = vec![0u8; batch.frames * users * m];
        let mut ops = None;
        match self {
            Self::Map(d) => {
                for f in 0..batch.frames {
                    let syms = d.detect_symbols(batch.received_row(f))?;
                    write_symbol_bits(&syms, m, &mut bits[f * users * m..(f + 1) * users * m]);
                }
            }
            Self::LogMpa(d) => {
                if !(batch.noise_var > 0.0) {
                    return Err(Error::InvalidArgument("Log-MPA needs a positive noise variance; use a finite Eb/N0".into()));
                }
                for f in 0..batch.frames {
                    let (dec, count) = d.detect(batch.received_row(f), batch.noise_var)?;
                    write_symbol_bits(&dec.symbols, m, &mut bits[f * users * m..(f + 1) * users * m]);
                    ops = Some(count);
                }
            }
            Self::Network { network, .. } => {
                let view = ArrayView2::from_shape((batch.frames, cfg.signal_width()), &batch.received)
                    .map_err(|e| Error::InvalidArgument(e.to_string()))?;
                let probs = network.predict(view)?;
                for (b, &p) in bits.iter_mut().zip(probs.iter()) {
                    *b = hard_decision(p);
                }
            }
        }
        Ok((bits, ops))
    }
}

impl Detector {
    /// Decisions for a single received frame (used for per-frame timing).
    pub fn decide_frame(&self, received: &[f64], noise_var: f64, cfg: &SystemConfig) -> Result<Vec<u8>> {
        let mut bits = vec![0u8; cfg.frame_bits()];
        match self {
            Self::Map(d) => write_symbol_bits(&d.detect_symbols(received)?, cfg.bits_per_symbol, &mut bits),
            Self::LogMpa(d) => write_symbol_bits(&d.detect(received, noise_var)?.0.symbols, cfg.bits_per_symbol, &mut bits),
            Self::Network { network, .. } => {
                for (b, &p) in bits.iter_mut().zip(&network.predict_frame(received)?) {
                    *b = hard_decision(p);
                }
            }
        }
        Ok(bits)
    }
}

fn write_symbol_bits(symbols: &[usize], m: usize, out: &mut [u8]) {
    for (j, &s) in symbols.iter().enumerate() {
        index_to_bits(s, &mut out[j * m..(j + 1) * m]);
    }
}

impl SweepSpec {
    /// Loads the codebook and builds the detector named by the spec.
    pub fn resolve(&self) -> Result<(Detector, Codebook, ChannelGain)> {
        let load_gains = |k: usize| match &self.gains {
            Some(g) => ChannelGain::new(g.clone()).map_err(Error::from),
            None => Ok(ChannelGain::ones(k)),
        };
        match &self.detector {
            DetectorSpec::AeDecoder { checkpoint } => {
                let ae = Autoencoder::load(checkpoint)?;
                if !matches!(self.codebook, CodebookSource::Reference | CodebookSource::Learned { .. }) {
                    return Err(Error::InvalidArgument("the autoencoder decoder only runs on its own learned codebook".into()));
                }
                let cb = ae.extract_codebook()?;
                let gains = ae.gains.clone();
                let det = Detector::Network {
                    label: "ae-decoder".into(),
                    network: ae.decoder,
                };
                Ok((det, cb, gains))
            }
            spec => {
                let cb = self.codebook.load()?;
                let gains = load_gains(cb.resources())?;
                let det = match spec {
                    DetectorSpec::Map => Detector::Map(MapDetector::new(&cb, &gains, DEFAULT_MAP_GUARD)?),
                    DetectorSpec::LogMpa { iterations } => {
                        Detector::LogMpa(LogMpaDetector::new(&cb, &gains, LogMpaOptions::new(*iterations))?)
                    }
                    DetectorSpec::DlDecoder { checkpoint } => {
                        let dec = TrainedDecoder::load(checkpoint)?;
                        let cfg = cb.system_config()?;
                        if dec.config().signal_width() != cfg.signal_width() || dec.config().frame_bits() != cfg.frame_bits() {
                            return Err(Error::InvalidArgument("decoder was trained for a different system size".into()));
                        }
                        Detector::Network {
                            label: "dl-decoder".into(),
                            network: dec.network,
                        }
                    }
                    DetectorSpec::AeDecoder { .. } => unreachable!("handled above"),
                };
                Ok((det, cb, gains))
            }
        }
    }
}

/// Resolves the spec and sweeps it.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    let (det, cb, gains) = spec.resolve()?;
    sweep_detector(&det, &cb, &gains, &spec.ebn0_db, &spec.stop, spec.seed, spec.timing)
}

impl Detector {
    pub fn sweep(
        &self,
        codebook: &Codebook,
        gains: &ChannelGain,
        grid: &[f64],
        stop: &StoppingRule,
        seed: u64,
    ) -> Result<SweepResult> {
        sweep_detector(self, codebook, gains, grid, stop, seed, false)
    }
}

fn sweep_detector(
    det: &Detector,
    cb: &Codebook,
    gains: &ChannelGain,
    grid: &[f64],
    stop: &StoppingRule,
    seed: u64,
    timing: bool,
) -> Result<SweepResult> {
    validate_grid(grid)?;
    if stop.batch_frames == 0 || stop.max_frames == 0 || stop.min_frames > stop.max_frames {
        return Err(Error::InvalidArgument(format!("bad stopping rule {stop:?}")));
    }
    let cfg = cb.system_config()?;
    let power = ensemble_power(cb, gains);
    let table = cb.signal_table(gains);
    let mut points = Vec::with_capacity(grid.len());
    for &db in grid {
        let var = noise_variance(power, ebn0_db_to_linear(db), &cfg)?;
        let (mut frames, mut bit_errors, mut symbol_errors, mut nanos) = (0u64, 0u64, 0u64, 0u128);
        let mut ops = None;
        let mut batch_index = 0u64;
        loop {
            let n = (stop.batch_frames as u64).min(stop.max_frames - frames) as usize;
            let mut rng = derived(seed, &[db.to_bits(), batch_index]);
            let batch = generate_frames(&table, n, var, &mut rng);
            let start = Instant::now();
            let (bits, count) = det.decide(&batch, &cfg)?;
            nanos += start.elapsed().as_nanos();
            let (b, s) = count_errors(&batch.bits, &bits, cfg.bits_per_symbol);
            bit_errors += b;
            symbol_errors += s;
            frames += n as u64;
            ops = ops.or(count);
            batch_index += 1;
            let enough = bit_errors >= stop.min_bit_errors && frames >= stop.min_frames;
            if enough || frames >= stop.max_frames {
                break;
            }
        }
        let total_bits = (frames * cfg.frame_bits() as u64) as f64;
        let ber = bit_errors as f64 / total_bits;
        let ser = symbol_errors as f64 / (frames * cfg.users as u64) as f64;
        points.push(SweepPoint {
            ebn0_db: db,
            frames,
            bit_errors,
            symbol_errors,
            ber,
            ser,
            ci95: 1.96 * (ber * (1.0 - ber) / total_bits).sqrt(),
            ns_per_frame: if timing { (nanos / u128::from(frames)) as f64 } else { 0.0 },
            ops,
        });
    }
    Ok(SweepResult {
        schema_version: SWEEP_SCHEMA_VERSION,
        detector: det.label(),
        config: cfg,
        signal_power: power,
        seed,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0:2:16").unwrap(), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0]);
        assert_eq!(parse_grid("0:0.5:1").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("6, 8,inf").unwrap(), vec![6.0, 8.0, f64::INFINITY]);
        for bad in ["", "3,2", "1,1", "0:0:4", "4:1:0", "a", "0:1", "nan"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn counting_identity_example() {
        // 100 frames of one 2-bit user, two single-bit symbol errors.
        let truth = vec![0u8; 200];
        let mut decided = truth.clone();
        decided[10] = 1;
        decided[51] = 1;
        assert_eq!(count_errors(&truth, &decided, 2), (2, 2));
        let cfg = SystemConfig::new(1, 1, 4, 1).unwrap();
        let result = SweepResult {
            schema_version: 1,
            detector: "x".into(),
            config: cfg,
            signal_power: 1.0,
            seed: 0,
            points: vec![SweepPoint {
                ebn0_db: 0.0,
                frames: 100,
                bit_errors: 2,
                symbol_errors: 2,
                ber: 0.01,
                ser: 0.02,
                ci95: 0.0,
                ns_per_frame: 0.0,
                ops: None,
            }],
        };
        result.check_identities().unwrap();
    }

    #[test]
    fn noiseless_map_sweep_is_error_free() {
        let cb = Codebook::reference();
        let gains = ChannelGain::ones(4);
        let det = Detector::Map(MapDetector::new(&cb, &gains, DEFAULT_MAP_GUARD).unwrap());
        let r = det.sweep(&cb, &gains, &[f64::INFINITY], &StoppingRule::fixed(3000, 1000), 1).unwrap();
        assert_eq!((r.points[0].bit_errors, r.points[0].symbol_errors, r.points[0].frames), (0, 0, 3000));
        let mpa = Detector::LogMpa(LogMpaDetector::new(&cb, &gains, LogMpaOptions::new(3)).unwrap());
        assert!(mpa.sweep(&cb, &gains, &[f64::INFINITY], &StoppingRule::fixed(10, 10), 1).is_err());
    }

    #[test]
    fn stopping_rule_and_determinism() {
        let cb = Codebook::reference();
        let gains = ChannelGain::ones(4);
        let det = Detector::LogMpa(LogMpaDetector::new(&cb, &gains, LogMpaOptions::new(3)).unwrap());
        let stop = StoppingRule {
            min_bit_errors: 100,
            min_frames: 200,
            max_frames: 50_000,
            batch_frames: 100,
        };
        let a = det.sweep(&cb, &gains, &[0.0, 4.0, 8.0], &stop, 7).unwrap();
        let b = det.sweep(&cb, &gains, &[4.0], &stop, 7).unwrap();
        assert_eq!(a.points[1], b.points[0]);
        assert_eq!(a.to_csv(), det.sweep(&cb, &gains, &[0.0, 4.0, 8.0], &stop, 7).unwrap().to_csv());
        a.check_identities().unwrap();
        for p in &a.points {
            assert!(p.bit_errors >= 100 || p.frames == 50_000);
            assert!(p.frames >= 200 && p.frames % 100 == 0);
            assert!(p.ops.is_some());
        }
        assert!(a.points[0].ber > a.points[2].ber);
        assert!(a.to_csv().starts_with(SWEEP_CSV_HEADER));
        assert_eq!(a.to_csv().lines().count(), 4);
    }
}
