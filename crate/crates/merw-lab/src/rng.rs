//! Counter-based random number generation.
//!
//! Every replica of a simulation draws from its own stream keyed by
//! `(master_seed, replica)`. Streams are stateless functions of the key and a
//! step counter, so an ensemble is bit-identical no matter how replicas are
//! scheduled across workers.

use std::f64::consts::PI;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// splitmix64 finalizer: bijective mixing of a 64-bit word.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a stream key for a replica of a master seed.
#[inline]
pub fn stream_key(master_seed: u64, replica: u64) -> u64 {
    mix64(master_seed ^ mix64(replica.wrapping_mul(GOLDEN).wrapping_add(0x5851_f42d_4c95_7f2d)))
}

/// Counter-based generator: output `i` is `mix64(key + i*GOLDEN)`.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    ctr: u64,
    spare_normal: Option<f64>,
}

impl CounterRng {
    pub fn new(master_seed: u64, replica: u64) -> Self {
        Self {
            key: stream_key(master_seed, replica),
            ctr: 0,
            spare_normal: None,
        }
    }

    /// Stream keyed by an extra label, for independent sub-streams of one
    /// replica (e.g. the half-step Richardson companion run).
    pub fn with_label(master_seed: u64, replica: u64, label: u64) -> Self {
        Self {
            key: stream_key(stream_key(master_seed, label), replica),
            ctr: 0,
            spare_normal: None,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let z = self.key.wrapping_add(self.ctr.wrapping_mul(GOLDEN));
        self.ctr = self.ctr.wrapping_add(1);
        mix64(z)
    }

    /// Uniform in [0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
    }

    /// Uniform in (0, 1].
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / 9007199254740992.0)
    }

    /// Standard normal via Box-Muller; the second draw of each pair is cached.
    #[inline]
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform_open();
        let u2 = self.uniform();
        let mag = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * PI * u2).sin_cos();
        self.spare_normal = Some(mag * s);
        mag * c
    }

    /// Exponential of rate 1.
    #[inline]
    pub fn exponential(&mut self) -> f64 {
        -self.uniform_open().ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible() {
        let mut a = CounterRng::new(7, 3);
        let mut b = CounterRng::new(7, 3);
        for _ in 0..256 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn streams_differ_between_replicas() {
        let mut a = CounterRng::new(7, 0);
        let mut b = CounterRng::new(7, 1);
        let xs: Vec<u64> = (0..16).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..16).map(|_| b.next_u64()).collect();
        assert_ne!(xs, ys);
    }

    #[test]
    fn uniform_stays_in_unit_interval() {
        let mut rng = CounterRng::new(42, 0);
        for _ in 0..10_000 {
            let u = rng.uniform();
            assert!((0.0..1.0).contains(&u));
            let v = rng.uniform_open();
            assert!(v > 0.0 && v <= 1.0);
        }
    }

    #[test]
    fn normal_moments_are_sane() {
        let mut rng = CounterRng::new(1234, 0);
        let n = 200_000;
        let samples: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }
}
