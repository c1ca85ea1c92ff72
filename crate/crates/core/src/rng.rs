//! Seeded random streams.
//!
//! Every replication owns one ChaCha8 stream derived from `(base, index)`, so
//! results do not depend on how replications are scheduled across threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `index` under seed base `base`.
pub fn replication_seed(base: u64, index: u64) -> u64 {
    mix(base ^ mix(index))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw on the open interval (0, 1) from the top 53 bits.
#[inline]
pub fn open01<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let bits = rng.next_u64() >> 11;
        if bits != 0 {
            return bits as f64 * (1.0 / (1u64 << 53) as f64);
        }
    }
}
