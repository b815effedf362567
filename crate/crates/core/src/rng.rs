//! Reproducible random streams.
//!
//! A stream is identified by `(master_seed, stream_id)`; the generator is a
//! ChaCha8 keystream keyed by the master seed and positioned on `stream_id`, so
//! replications draw from disjoint streams independent of scheduling order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self { master_seed, stream_id }
    }

    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Child stream for a sub-task, e.g. one replication of one horizon.
    pub fn derive(&self, key: u64) -> RngStream {
        RngStream {
            master_seed: self.master_seed,
            stream_id: splitmix64(self.stream_id ^ splitmix64(key.wrapping_add(0x9E37_79B9))),
        }
    }

    /// Child stream keyed by a path of indices.
    pub fn derive_path(&self, keys: &[u64]) -> RngStream {
        keys.iter().fold(*self, |s, k| s.derive(*k))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn standard_normal(rng: &mut StreamRng) -> f64 {
    rng.sample(StandardNormal)
}

/// Uniform point on the unit Euclidean sphere in `R^d`.
pub fn uniform_on_unit_sphere(d: usize, rng: &mut StreamRng) -> Vec<f64> {
    if d == 1 {
        return vec![if rng.random::<bool>() { 1.0 } else { -1.0 }];
    }
    loop {
        let g: Vec<f64> = (0..d).map(|_| standard_normal(rng)).collect();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-300 {
            return g.into_iter().map(|v| v / norm).collect();
        }
    }
}

/// Uniform point in the closed unit Euclidean ball in `R^d`.
pub fn uniform_in_unit_ball(d: usize, rng: &mut StreamRng) -> Vec<f64> {
    let dir = uniform_on_unit_sphere(d, rng);
    let r = rng.random::<f64>().powf(1.0 / d as f64);
    dir.into_iter().map(|v| v * r).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_streams_draw_identically() {
        let a: Vec<u64> = {
            let mut r = RngStream::new(42, 5).rng();
            (0..64).map(|_| r.random()).collect()
        };
        let b: Vec<u64> = {
            let mut r = RngStream::new(42, 5).rng();
            (0..64).map(|_| r.random()).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_streams_differ() {
        let mut r1 = RngStream::new(42, 5).rng();
        let mut r2 = RngStream::new(42, 6).rng();
        let x: Vec<u64> = (0..8).map(|_| r1.random()).collect();
        let y: Vec<u64> = (0..8).map(|_| r2.random()).collect();
        assert_ne!(x, y);
        let s = RngStream::new(1, 0);
        assert_ne!(s.derive(0), s.derive(1));
        assert_eq!(s.derive_path(&[3, 4]), s.derive(3).derive(4));
    }

    #[test]
    fn ball_samples_inside() {
        let mut r = RngStream::new(0, 0).rng();
        for d in 1..5 {
            for _ in 0..200 {
                let w = uniform_in_unit_ball(d, &mut r);
                assert!(w.iter().map(|v| v * v).sum::<f64>() <= 1.0 + 1e-12);
                let u = uniform_on_unit_sphere(d, &mut r);
                assert!((u.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }
}
