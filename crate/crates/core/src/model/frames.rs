use rand::Rng;
use rand_distr::StandardNormal;

use super::codebook::SignalTable;
use super::index_to_bits;

/// A block of random frames, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBatch {
    pub frames: usize,
    /// `frames × J` transmitted symbol indices.
    pub symbols: Vec<usize>,
    /// `frames × mJ` bits, user-major, big-endian within a symbol.
    pub bits: Vec<u8>,
    /// `frames × 2K` clean superpositions.
    pub clean: Vec<f64>,
    /// `frames × 2K` noisy observations.
    pub received: Vec<f64>,
    pub noise_var: f64,
}

impl FrameBatch {
    pub fn received_row(&self, frame: usize) -> &[f64] {
        let w = self.received.len() / self.frames.max(1);
        &self.received[frame * w..(frame + 1) * w]
    }

    pub fn symbols_row(&self, frame: usize) -> &[usize] {
        let j = self.symbols.len() / self.frames.max(1);
        &self.symbols[frame * j..(frame + 1) * j]
    }
}

/// Uniform symbols for every user, superposed through `table`, plus Gaussian noise
/// of per-component variance `noise_var` (zero disables it).
///
/// Draw order per frame: J symbol indices, then 2K normals.
pub fn generate_frames<R: Rng + ?Sized>(table: &SignalTable, frames: usize, noise_var: f64, rng: &mut R) -> FrameBatch {
    let (users, width, m_size) = (table.users(), table.width(), table.codebook_size());
    let m = m_size.trailing_zeros() as usize;
    let sd = noise_var.sqrt();
    let mut batch = FrameBatch {
        frames,
        symbols: Vec::with_capacity(frames * users),
        bits: vec![0; frames * users * m],
        clean: vec![0.0; frames * width],
        received: vec![0.0; frames * width],
        noise_var,
    };
    for f in 0..frames {
        let start = batch.symbols.len();
        for _ in 0..users {
            batch.symbols.push(rng.random_range(0..m_size));
        }
        let syms = &batch.symbols[start..];
        for (j, &s) in syms.iter().enumerate() {
            let off = (f * users + j) * m;
            index_to_bits(s, &mut batch.bits[off..off + m]);
        }
        let clean = &mut batch.clean[f * width..(f + 1) * width];
        table.superpose_into(syms, clean);
        let noisy = &mut batch.received[f * width..(f + 1) * width];
        for (y, &x) in noisy.iter_mut().zip(clean.iter()) {
            *y = if noise_var > 0.0 { x + sd * rng.sample::<f64, _>(StandardNormal) } else { x };
        }
    }
    batch
}
