use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::Detector;
use crate::model::{ebn0_db_to_linear, ensemble_power, generate_frames, noise_variance, ChannelGain, Codebook};
use crate::rng::derived;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HardwareInfo {
    pub os: String,
    pub arch: String,
    pub logical_cpus: usize,
    pub cpu_model: Option<String>,
}

impl HardwareInfo {
    pub fn detect() -> Self {
        let cpu_model = std::fs::read_to_string("/proc/cpuinfo").ok().and_then(|text| {
            text.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split(':').nth(1))
                .map(|s| s.trim().to_string())
        });
        Self {
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            logical_cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            cpu_model,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub detector: String,
    pub frames: usize,
    pub mean_ns_per_frame: f64,
    /// Hash of every timed decision, to confirm two runs saw the same frames.
    pub decision_hash: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub hardware: HardwareInfo,
    pub ebn0_db: f64,
    pub seed: u64,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("detector,frames,mean_ns_per_frame\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{:.1}\n", r.detector, r.frames, r.mean_ns_per_frame));
        }
        out
    }

    pub fn mean(&self, detector: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.detector == detector).map(|r| r.mean_ns_per_frame)
    }
}

/// Mean wall-clock decode time per frame, one frame per call. Every detector
/// sees the same frames; the first tenth (at least one frame) is a warm-up.
pub fn benchmark_runtime(
    detectors: &[Detector],
    codebook: &Codebook,
    gains: &ChannelGain,
    frames: usize,
    ebn0_db: f64,
    seed: u64,
) -> Result<BenchReport> {
    if frames < 2 {
        return Err(Error::InvalidArgument("benchmark needs at least 2 frames".into()));
    }
    let cfg = codebook.system_config()?;
    let var = noise_variance(ensemble_power(codebook, gains), ebn0_db_to_linear(ebn0_db), &cfg)?;
    let batch = generate_frames(&codebook.signal_table(gains), frames, var, &mut derived(seed, &[0]));
    let warmup = (frames / 10).max(1);
    let mut rows = Vec::with_capacity(detectors.len());
    for det in detectors {
        for f in 0..warmup {
            det.decide_frame(batch.received_row(f), var, &cfg)?;
        }
        let mut decisions = Vec::with_capacity((frames - warmup) * cfg.frame_bits());
        let start = Instant::now();
        for f in warmup..frames {
            decisions.extend(det.decide_frame(batch.received_row(f), var, &cfg)?);
        }
        let elapsed = start.elapsed();
        let decision_hash = decisions
            .iter()
            .fold(0xcbf2_9ce4_8422_2325u64, |h, &b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3));
        rows.push(BenchRow {
            detector: det.label(),
            frames: frames - warmup,
            mean_ns_per_frame: elapsed.as_nanos() as f64 / (frames - warmup) as f64,
            decision_hash,
        });
    }
    Ok(BenchReport {
        hardware: HardwareInfo::detect(),
        ebn0_db,
        seed,
        rows,
    })
}
