//! Counter-based pseudo-random numbers.
//!
//! The generator is SplitMix64 addressed by counter: the `k`-th output of the
//! stream keyed by `key` is
//!
//! ```text
//! z = key + (k + 1) * 0x9E3779B97F4A7C15          (mod 2^64)
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! out = z ^ (z >> 31)
//! ```
//!
//! which is exactly the sequential SplitMix64 output sequence seeded with
//! `key`, but any element can be computed independently. Sub-streams are keyed
//! with [`CounterRng::substream`]. Uniform deviates use the top 53 bits shifted
//! by half an ulp so they lie in the open interval (0, 1). Normal deviates use
//! the cosine branch of Box–Muller on two consecutive uniforms.

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        Self { key }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Independent stream for index `stream` (e.g. a bootstrap replicate).
    pub fn substream(&self, stream: u64) -> Self {
        Self {
            key: mix64(self.key ^ mix64(stream.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA))),
        }
    }

    #[inline]
    pub fn u64_at(&self, counter: u64) -> u64 {
        mix64(
            self.key
                .wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)),
        )
    }

    /// Uniform deviate in (0, 1).
    #[inline]
    pub fn uniform_at(&self, counter: u64) -> f64 {
        ((self.u64_at(counter) >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `0..n` (multiply-high reduction).
    #[inline]
    pub fn index_at(&self, counter: u64, n: usize) -> usize {
        ((self.u64_at(counter) as u128 * n as u128) >> 64) as usize
    }

    /// Standard normal deviate from the uniforms at `counter` and `counter + 1`.
    #[inline]
    pub fn normal_at(&self, counter: u64) -> f64 {
        box_muller(self.uniform_at(counter), self.uniform_at(counter + 1))
    }
}

#[inline]
pub fn box_muller(u1: f64, u2: f64) -> f64 {
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
