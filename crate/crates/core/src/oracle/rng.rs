//! Counter-based uniform generator: `splitmix64` applied to (seed, index).
//!
//! The value at index `i` depends only on `(seed, i)`, so streams are
//! reproducible across platforms and can be generated in parallel.

pub const NAME: &str = "splitmix64-counter";

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { key: splitmix64(seed) }
    }

    pub fn bits(&self, index: u64) -> u64 {
        splitmix64(self.key ^ splitmix64(index))
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&self, index: u64) -> f64 {
        ((self.bits(index) >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}
