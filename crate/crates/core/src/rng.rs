//! Portable seeded noise.
//!
//! ChaCha20 (20 rounds, the `rand_chacha` stream seeded through
//! `SeedableRng::seed_from_u64`) produces 64-bit words; a uniform sample in
//! `[0, 1)` is `(word >> 11) * 2^-53`, and a symmetric sample in `[-1, 1)` is
//! `2 u - 1`. Any language with a ChaCha20 implementation and the same seed
//! expansion reproduces the streams bit for bit.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

/// Description recorded in run manifests.
pub const RNG_DESCRIPTION: &str = "ChaCha20 (rand_chacha 0.3, seed_from_u64); \
uniform = (next_u64 >> 11) * 2^-53 in [0,1); symmetric = 2*uniform - 1";

#[derive(Debug, Clone)]
pub struct NoiseSource {
    rng: ChaCha20Rng,
}

impl NoiseSource {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn symmetric(&mut self) -> f64 {
        2.0 * self.uniform() - 1.0
    }

    /// `n` samples uniform in `[-amplitude, amplitude)`.
    pub fn white(&mut self, n: usize, amplitude: f64) -> Vec<f64> {
        (0..n).map(|_| amplitude * self.symmetric()).collect()
    }
}
