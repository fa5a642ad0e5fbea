//! Portable seeded randomness.
//!
//! Every random draw in the simulator goes through [`SimRng`], a thin wrapper
//! around xoshiro256++ whose 256-bit state is filled from a 64-bit seed by
//! four successive SplitMix64 outputs. On top of the raw 64-bit stream the
//! wrapper defines its own sampling rules, so that a layout or an action
//! sequence can be reproduced bit-for-bit by any implementation:
//!
//! * [`SimRng::below`] draws an integer in `0..n` with Lemire's widening
//!   multiply and rejection of the biased low range.
//! * [`SimRng::unit`] takes the top 53 bits of one output and scales by 2⁻⁵³.
//!
//! Seeds for independent streams (per-episode layouts, per-episode agent
//! randomness, network initialisation) come from [`derive_seed`].

use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function (the finaliser applied after adding the gamma).
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Named sub-streams of a master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    TrainLayout = 1,
    TrainAgent = 2,
    EvalLayout = 3,
    EvalAgent = 4,
    NetInit = 5,
}

/// Seed for item `index` of `stream` under `master`.
///
/// `mix64(mix64(master ^ (stream · γ)) + (index + 1) · γ)` with γ the
/// SplitMix64 golden gamma and wrapping arithmetic throughout.
pub fn derive_seed(master: u64, stream: Stream, index: u64) -> u64 {
    let base = mix64(master ^ (stream as u64).wrapping_mul(GOLDEN_GAMMA));
    mix64(base.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

#[derive(Debug, Clone)]
pub struct SimRng {
    inner: Xoshiro256PlusPlus,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform integer in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0) has no valid outcome");
        let mut m = u128::from(self.next_u64()) * u128::from(n);
        let mut low = m as u64;
        if low < n {
            let threshold = n.wrapping_neg() % n;
            while low < threshold {
                m = u128::from(self.next_u64()) * u128::from(n);
                low = m as u64;
            }
        }
        (m >> 64) as u64
    }

    /// Uniform index into a collection of length `len`.
    pub fn index(&mut self, len: usize) -> usize {
        self.below(len as u64) as usize
    }

    /// Uniform integer in `lo..=hi`.
    pub fn range_inclusive(&mut self, lo: u64, hi: u64) -> u64 {
        assert!(lo <= hi);
        lo + self.below(hi - lo + 1)
    }

    /// Uniform float in `[0, 1)` with 53 bits of precision.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Fair coin.
    pub fn coin(&mut self) -> bool {
        self.below(2) == 1
    }
}
