//! Trial randomness.
//!
//! All draws come from ChaCha8 (`rand_chacha` 0.9) keyed with
//! `ChaCha8Rng::seed_from_u64(seed)`. Stream 0 carries UE positions,
//! stream 1 carries per-link LOS and shadowing draws, so enabling shadowing
//! never moves a UE. Uniforms use the top 53 bits of `next_u64`; normals use
//! the Box-Muller cosine branch. These conversions are part of the
//! reproducibility contract (stream version 1).

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub const STREAM_VERSION: u32 = 1;

const POSITION_STREAM: u64 = 0;
const CHANNEL_STREAM: u64 = 1;

pub struct TrialRng {
    inner: ChaCha8Rng,
}

impl TrialRng {
    pub fn positions(seed: u64) -> Self {
        Self::with_stream(seed, POSITION_STREAM)
    }

    pub fn channel(seed: u64) -> Self {
        Self::with_stream(seed, CHANNEL_STREAM)
    }

    fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        TrialRng { inner }
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        // 1 - u keeps the log argument in (0, 1].
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_in_unit_interval() {
        let mut rng = TrialRng::positions(7);
        for _ in 0..10_000 {
            let u = rng.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn streams_are_independent() {
        let a: Vec<f64> = {
            let mut r = TrialRng::positions(3);
            (0..4).map(|_| r.uniform()).collect()
        };
        let b: Vec<f64> = {
            let mut r = TrialRng::channel(3);
            (0..4).map(|_| r.uniform()).collect()
        };
        assert_ne!(a, b);
    }

    #[test]
    fn normal_moments() {
        let mut rng = TrialRng::channel(11);
        let n = 50_000;
        let xs: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.02, "{mean}");
        assert!((var - 1.0).abs() < 0.03, "{var}");
    }
}
