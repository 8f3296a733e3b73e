//! Counter-based random streams.
//!
//! Every replication of a simulation draws from its own ChaCha8 stream keyed
//! by `(seed, index)`, so results do not depend on how replications are
//! scheduled across threads.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub use rand_chacha::ChaCha8Rng as StreamRng;

/// Independent stream number `index` of the family keyed by `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Mixes a domain tag into a seed (SplitMix64 finaliser), so that different
/// uses of the same user seed get unrelated stream families.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform draw on the open interval (0, 1), 53 bits of resolution.
#[inline]
pub fn uniform_open01<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard exponential draw by inversion.
#[inline]
pub fn standard_exponential<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    -crate::math::ln(uniform_open01(rng))
}
