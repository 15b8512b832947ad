//! Seeded, splittable random streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::C64;

/// Mixes a seed with a stream index (splitmix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic random stream. ChaCha8 output is specified bit-for-bit, so the
/// same seed yields the same samples on every platform.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child stream for worker or trial `index`.
    pub fn split(&self, index: u64) -> Self {
        Self::new(derive_seed(self.seed, index))
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    pub fn unit(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Circularly symmetric complex Gaussian with total variance `variance`
    /// (each of the real and imaginary parts has `variance / 2`).
    pub fn complex_normal(&mut self, variance: f64) -> C64 {
        let s = (variance / 2.0).sqrt();
        C64::new(s * self.normal(), s * self.normal())
    }

    /// `U(−1,1) + jU(−1,1)`.
    pub fn complex_uniform(&mut self) -> C64 {
        C64::new(self.uniform(-1.0, 1.0), self.uniform(-1.0, 1.0))
    }
}
