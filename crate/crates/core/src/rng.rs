//! Seeded random streams.
//!
//! Every stream is a ChaCha8 generator seeded from a `u64`. Parallel work
//! splits into substreams whose seed is `base ^ index`, so a run is a pure
//! function of its base seed no matter how the substreams are scheduled.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Substream `index` of the base seed `base`.
    pub fn substream(base: u64, index: u64) -> Self {
        Self::new(base ^ index)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Circularly-symmetric complex normal with `E|z|² = 1`.
    ///
    /// Polar Box–Muller: two uniforms `u₁, u₂` give radius `√(−ln(1−u₁))` and
    /// angle `2π·u₂`. This transform is part of the reproducibility contract.
    pub fn complex_normal(&mut self) -> Complex64 {
        let u1 = 1.0 - self.uniform(); // (0, 1]
        let u2 = self.uniform();
        Complex64::from_polar((-u1.ln()).sqrt(), 2.0 * PI * u2)
    }
}
