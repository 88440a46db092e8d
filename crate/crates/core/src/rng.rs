//! Counter-derived random streams.
//!
//! Every random draw in the crate comes from a generator seeded by hashing a
//! master seed together with the coordinates of the draw (design index,
//! sample index, purpose). Results therefore do not depend on how work is
//! split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type StreamRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-sensitive hash of a sequence of words.
pub fn mix(words: &[u64]) -> u64 {
    words.iter().fold(0x6A09_E667_F3BC_C908, |acc, w| {
        splitmix64(acc ^ splitmix64(*w))
    })
}

/// Generator for the stream addressed by `words`.
pub fn stream(words: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(mix(words))
}

/// Stable 64-bit hash of a string label (FNV-1a), for keying streams by name.
pub fn label(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}
