//! Deterministic, splittable seed streams.
//!
//! Every stochastic operation in the crate takes an explicit [`SeedStream`].
//! A stream can be split into independent child streams by tag, so parallel
//! workers derive their randomness from (master seed, work-item index) and
//! results are bit-identical regardless of the worker count or evaluation
//! order. Per-link fading is likewise a pure function of the stream, which is
//! what makes common-random-number comparisons across MACs exact.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

#[inline]
fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A point in a tree of deterministic random streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedStream(u64);

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        SeedStream(splitmix64(seed))
    }

    /// Derives an independent child stream. Children with distinct tags are
    /// statistically independent; the derivation is associative-free, so the
    /// same (root, tag path) always yields the same stream.
    #[inline]
    pub fn child(self, tag: u64) -> Self {
        SeedStream(splitmix64(self.0 ^ splitmix64(tag ^ 0xD1B5_4A32_D192_ED03)))
    }

    /// A full RNG for bulk sampling (point processes, shuffles).
    pub fn rng(self) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(self.0)
    }

    /// One uniform draw in `[0, 1)` consuming the stream.
    #[inline]
    pub fn uniform(self) -> f64 {
        // 53 high bits -> [0, 1) on the dyadic grid.
        ((splitmix64(self.0 ^ 0xA0761D6478BD642F) >> 11) as f64) * (1.0 / 9007199254740992.0)
    }

    /// One unit-mean exponential draw (Rayleigh power fading).
    #[inline]
    pub fn unit_exponential(self) -> f64 {
        // u in [0,1) so 1-u in (0,1]; -ln(1-u) is exactly Exp(1).
        -(1.0 - self.uniform()).ln()
    }
}
