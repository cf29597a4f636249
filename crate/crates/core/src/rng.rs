//! Seeded randomness. Every trial of a best-of loop gets its own ChaCha
//! stream derived from `(seed, trial)`, so results do not depend on how
//! trials are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{c64, C64};

#[derive(Clone, Debug)]
pub struct Sampler {
    rng: ChaCha8Rng,
}

/// Sampler for the hyperbolic secant law and the discrete rounding choices.
pub type SecantSampler = Sampler;

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Stream `index` of the family keyed by `seed`.
    pub fn stream(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self { rng }
    }

    /// Uniform in the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        loop {
            let u: f64 = self.rng.random();
            if u > 0.0 {
                return u;
            }
        }
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    /// One draw from the density `sech(πt/2)/2` by inverting its CDF.
    pub fn secant(&mut self) -> f64 {
        let u = self.uniform().clamp(1e-12, 1.0 - 1e-12);
        (2.0 / std::f64::consts::PI) * (std::f64::consts::FRAC_PI_2 * u).tan().ln()
    }

    /// Uniform vector in `{1, -1, i, -i}^d`.
    pub fn fourth_roots(&mut self, d: usize) -> Vec<C64> {
        (0..d).map(|_| quarter_turn(self.rng.random_range(0..4u8))).collect()
    }

    /// Uniform vector in `{1, -1}^d`.
    pub fn signs(&mut self, d: usize) -> Vec<f64> {
        (0..d).map(|_| if self.rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
    }
}

/// `i^k` for `k` in `0..4`.
pub fn quarter_turn(k: u8) -> C64 {
    match k & 3 {
        0 => c64(1.0, 0.0),
        1 => c64(0.0, 1.0),
        2 => c64(-1.0, 0.0),
        _ => c64(0.0, -1.0),
    }
}
