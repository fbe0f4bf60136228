//! Seed derivation. Every random draw in the crate comes from a ChaCha8
//! stream named by a master seed and a stream index, so results never depend
//! on scheduling or thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Name of the generator, echoed in reports.
pub const GENERATOR: &str = "chacha8";

/// Generator for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Independent child seed, for handing a whole sub-computation its own
/// family of streams.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// A fresh master seed from the operating system.
pub fn fresh_seed() -> u64 {
    rand::rng().random()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
