//! Seeded Gaussian noise.
//!
//! The generator is xoshiro256** seeded through SplitMix64 (the
//! `seed_from_u64` convention of `rand_core`), and normals come from the
//! Box–Muller transform. Both halves of each Box–Muller pair are used, cosine
//! first. Session files produced by the simulator depend on this exact
//! sequence, so changing anything here changes golden outputs.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

#[derive(Clone, Debug)]
pub struct GaussianSource {
    rng: Xoshiro256StarStar,
    spare: Option<f64>,
}

impl GaussianSource {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: Xoshiro256StarStar::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// A standard normal draw.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        // 1 - u keeps the log argument in (0, 1]
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }

    pub fn normal(&mut self, std: f64) -> f64 {
        std * self.standard_normal()
    }
}
