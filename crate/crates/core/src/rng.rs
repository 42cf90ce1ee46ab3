//! Deterministic, splittable random streams.
//!
//! Every sample path draws from its own [`Stream`], identified by a
//! [`Seed`] `(master, stream_index)`. The underlying generator is ChaCha8,
//! which is counter based: the master seed becomes the cipher key and the
//! path index becomes the 64-bit stream (nonce) word. Deriving a stream is
//! therefore pure arithmetic, so path `i` of an experiment is the same no
//! matter which worker computes it or in which order.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default master seed used when neither the config file nor the CLI sets one.
pub const DEFAULT_MASTER_SEED: u64 = 0x5EED_2024_0001_u64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RngError {
    #[error("rate must be finite and positive, got {0}")]
    InvalidRate(f64),
    #[error("uniform bounds must be finite with lo < hi, got [{lo}, {hi})")]
    InvalidBounds { lo: f64, hi: f64 },
}

/// Identity of one random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed {
    pub master: u64,
    pub stream_index: u64,
}

/// Maps `(master, index)` to the seed of stream `index`.
///
/// The mapping is injective: the master occupies its own key word and the
/// index is the cipher's stream word, so two distinct pairs never share
/// generator state.
pub fn derive_stream(master: u64, index: u64) -> Seed {
    Seed {
        master,
        stream_index: index,
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn expand_key(master: u64) -> [u8; 32] {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master.to_le_bytes());
    let mut state = master;
    for chunk in key[8..].chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

/// A single-owner random stream.
#[derive(Debug, Clone)]
pub struct Stream {
    rng: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl From<Seed> for Stream {
    fn from(seed: Seed) -> Self {
        Stream::new(seed)
    }
}

impl Stream {
    pub fn new(seed: Seed) -> Self {
        let mut rng = ChaCha8Rng::from_seed(expand_key(seed.master));
        rng.set_stream(seed.stream_index);
        Stream {
            rng,
            spare_normal: None,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform01(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `(0, 1]`; safe to take logarithms of and to divide by.
    #[inline]
    pub fn uniform_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal by the Marsaglia polar method (exact rejection, no
    /// tables). The second variate of each accepted pair is kept for the
    /// next call.
    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.uniform01() - 1.0;
            let v = 2.0 * self.uniform01() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let factor = (-2.0 * s.ln() / s).sqrt();
                self.spare_normal = Some(v * factor);
                return u * factor;
            }
        }
    }

    /// Exponential with unit rate by inversion.
    #[inline]
    pub fn standard_exponential(&mut self) -> f64 {
        -self.uniform_open01().ln()
    }

    pub fn sample_standard_normal(&mut self) -> f64 {
        self.standard_normal()
    }

    pub fn sample_exponential(&mut self, rate: f64) -> Result<f64, RngError> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(RngError::InvalidRate(rate));
        }
        Ok(self.standard_exponential() / rate)
    }

    pub fn sample_uniform(&mut self, lo: f64, hi: f64) -> Result<f64, RngError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(RngError::InvalidBounds { lo, hi });
        }
        Ok(lo + (hi - lo) * self.uniform01())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn first_draws(master: u64, index: u64, n: usize) -> Vec<u64> {
        let mut s = Stream::new(derive_stream(master, index));
        (0..n).map(|_| s.next_u64()).collect()
    }

    #[test]
    fn same_seed_same_sequence() {
        assert_eq!(first_draws(42, 0, 100), first_draws(42, 0, 100));
    }

    #[test]
    fn neighbouring_streams_differ() {
        let a = first_draws(42, 0, 100);
        let b = first_draws(42, 1, 100);
        assert!(a.iter().zip(&b).all(|(x, y)| x != y));
    }

    #[test]
    fn masters_differ() {
        let a = first_draws(42, 0, 100);
        let b = first_draws(43, 0, 100);
        assert!(a.iter().zip(&b).all(|(x, y)| x != y));
    }

    #[test]
    fn bad_parameters_rejected() {
        let mut s = Stream::new(derive_stream(1, 1));
        assert!(s.sample_exponential(0.0).is_err());
        assert!(s.sample_exponential(f64::NAN).is_err());
        assert!(s.sample_exponential(-1.0).is_err());
        assert!(s.sample_uniform(1.0, 1.0).is_err());
        assert!(s.sample_uniform(0.0, f64::INFINITY).is_err());
        assert!(s.sample_uniform(-1.0, 1.0).is_ok());
    }

    #[test]
    fn open_uniform_never_zero() {
        let mut s = Stream::new(derive_stream(7, 3));
        for _ in 0..10_000 {
            let u = s.uniform_open01();
            assert!(u > 0.0 && u <= 1.0);
        }
    }

    fn mean_and_se(xs: impl Iterator<Item = f64>) -> (f64, f64) {
        let (mut n, mut s, mut s2) = (0.0, 0.0, 0.0);
        for x in xs {
            n += 1.0;
            s += x;
            s2 += x * x;
        }
        let mean = s / n;
        let var = (s2 / n - mean * mean) * n / (n - 1.0);
        (mean, (var / n).sqrt())
    }

    #[test]
    fn normal_mean_and_variance() {
        let mut s = Stream::new(derive_stream(11, 0));
        let xs: Vec<f64> = (0..1_000_000).map(|_| s.sample_standard_normal()).collect();
        let (m, se) = mean_and_se(xs.iter().copied());
        assert!(m.abs() < 3.0 * se, "mean {m} se {se}");
        assert!(se < 1.1e-3);
        let (m2, se2) = mean_and_se(xs.iter().map(|x| x * x));
        assert!((m2 - 1.0).abs() < 3.0 * se2, "second moment {m2}");
    }

    #[test]
    fn exponential_mean() {
        let mut s = Stream::new(derive_stream(12, 0));
        let (m, se) = mean_and_se((0..1_000_000).map(|_| s.sample_exponential(2.0).unwrap()));
        assert!((m - 0.5).abs() < 3.0 * se, "mean {m} se {se}");
    }

    #[test]
    fn uniform_second_moment() {
        let mut s = Stream::new(derive_stream(13, 0));
        let (m, se) =
            mean_and_se((0..1_000_000).map(|_| s.sample_uniform(-1.0, 1.0).unwrap().powi(2)));
        assert!(
            (m - 1.0 / 3.0).abs() < 3.0 * se,
            "second moment {m} se {se}"
        );
    }

    #[test]
    fn adjacent_streams_uncorrelated() {
        let n = 100_000;
        let mut a = Stream::new(derive_stream(99, 5));
        let mut b = Stream::new(derive_stream(99, 6));
        let (m, se) = mean_and_se((0..n).map(|_| a.standard_normal() * b.standard_normal()));
        // E[XY] = 0 with Var = 1 for independent standard normals.
        assert!(m.abs() < 3.0 * se, "correlation {m} se {se}");
    }
}
