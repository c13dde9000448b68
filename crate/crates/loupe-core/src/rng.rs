//! Counter-based random streams.
//!
//! The generator is ChaCha8 keyed by the 64-bit seed, with the stream index selecting one of
//! 2^64 independent keystreams. Output depends only on `(seed, stream)`, so samples can be
//! partitioned across workers by stream index and reproduced on any platform.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::C64;

/// Identifies a reproducible random stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngStream { seed, stream }
    }

    /// Instantiates the generator for this stream.
    pub fn rng(&self) -> StreamRng {
        let mut inner = ChaCha8Rng::seed_from_u64(self.seed);
        inner.set_stream(self.stream);
        StreamRng { inner }
    }

    /// A child stream whose seed mixes in `tag`, for nested estimators.
    pub fn child(&self, tag: u64) -> RngStream {
        RngStream { seed: splitmix(self.seed ^ splitmix(tag.wrapping_add(0x9E37_79B9_7F4A_7C15))), stream: self.stream }
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Generator bound to one stream.
pub struct StreamRng {
    inner: ChaCha8Rng,
}

impl StreamRng {
    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform angle on `[0, 2π)`.
    #[inline]
    pub fn angle(&mut self) -> f64 {
        std::f64::consts::TAU * self.uniform()
    }

    /// Uniform point on the unit circle.
    #[inline]
    pub fn unit(&mut self) -> C64 {
        C64::from_polar(1.0, self.angle())
    }

    /// Standard normal variate (Box–Muller).
    pub fn normal(&mut self) -> f64 {
        let u = 1.0 - self.uniform();
        let v = self.uniform();
        (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<f64> = (0..8).scan(RngStream::new(7, 3).rng(), |r, _| Some(r.uniform())).collect();
        let b: Vec<f64> = (0..8).scan(RngStream::new(7, 3).rng(), |r, _| Some(r.uniform())).collect();
        let c: Vec<f64> = (0..8).scan(RngStream::new(7, 4).rng(), |r, _| Some(r.uniform())).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn frozen_first_draw() {
        // Cross-platform determinism: the first words of two streams are fixed.
        assert_eq!(RngStream::new(1, 0).rng().next_u64(), 0x6709_4cea_8ca4_0db1);
        assert_eq!(RngStream::new(1, 5).rng().next_u64(), 0x6399_2570_090d_d2bb);
    }

    #[test]
    fn normal_moments() {
        let mut r = RngStream::new(11, 0).rng();
        let xs: Vec<f64> = (0..200_000).map(|_| r.normal()).collect();
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!(m.abs() < 0.01 && (v - 1.0).abs() < 0.01);
    }
}
