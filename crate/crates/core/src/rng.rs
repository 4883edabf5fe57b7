//! Deterministic random number streams.
//!
//! Every stochastic component of the crate draws from a [`Stream`]: a
//! ChaCha8 generator seeded by a 64-bit value derived with [`mix`]. The
//! mapping from raw 64-bit output to floats is pinned here rather than
//! delegated to a distributions crate, so results stay bit-identical
//! across dependency upgrades:
//!
//! * uniform `[0, 1)` takes the top 53 bits of one `u64`;
//! * standard normals use the Marsaglia polar method, returning one
//!   value per call (the paired value is discarded);
//! * lognormals exponentiate `ln(median) + sigma * N(0, 1)`.
//!
//! Independent sub-streams are derived by folding context words (task
//! ids, VM indices, replication indices) into the master seed with a
//! splitmix64 finalizer, so a stream's output depends only on its key,
//! never on iteration order.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Domain tags keep unrelated stream families disjoint under one master seed.
pub mod tag {
    /// Workload synthesis (arrivals, content profiles).
    pub const WORKLOAD: u64 = 0x574b_4c44;
    /// Per-(task, vm) ratio draws when building an ETC matrix.
    pub const ETC: u64 = 0x0045_5443;
    /// Per-replication seeds for simulation experiments.
    pub const REPLICATION: u64 = 0x0052_4550;
    /// Stateless scores for the random scheduling policy.
    pub const RANDOM_POLICY: u64 = 0x0052_4e44;
    /// Scheduler-side estimation noise on ETC entries.
    pub const ESTIMATE_NOISE: u64 = 0x4e4f_4953;
}

/// splitmix64 finalizer (Steele, Lea, Flood 2014).
#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a sub-stream seed by absorbing each context word into `seed`.
pub fn mix(seed: u64, words: &[u64]) -> u64 {
    let mut h = splitmix64(seed);
    for &w in words {
        h = splitmix64(h ^ w);
    }
    h
}

/// Maps a u64 to `[0, 1)` using its top 53 bits.
#[inline]
pub fn unit_from_bits(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// A seeded, reproducible random stream.
#[derive(Debug, Clone)]
pub struct Stream {
    rng: ChaCha8Rng,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Stream keyed by (master seed, domain tag, context words).
    pub fn derived(seed: u64, domain: u64, words: &[u64]) -> Self {
        let mut key = mix(seed, &[domain]);
        key = mix(key, words);
        Self::new(key)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        unit_from_bits(self.next_u64())
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Bernoulli draw with success probability `p`.
    pub fn coin(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    /// Standard normal via the polar method. Rejection terminates with
    /// probability 1; each accepted pair yields a single value.
    pub fn standard_normal(&mut self) -> f64 {
        loop {
            let u = 2.0 * self.unit() - 1.0;
            let v = 2.0 * self.unit() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                return u * (-2.0 * s.ln() / s).sqrt();
            }
        }
    }

    pub fn normal(&mut self, mean: f64, std: f64) -> f64 {
        mean + std * self.standard_normal()
    }

    /// Lognormal parameterized by its median and log-space sigma.
    pub fn lognormal_median(&mut self, median: f64, sigma: f64) -> f64 {
        (median.ln() + sigma * self.standard_normal()).exp()
    }
}
