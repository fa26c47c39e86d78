//! Seed derivation and keyed random streams.
//!
//! Every consumer of randomness gets a ChaCha8 generator keyed by
//! `(seed, stream)`, so independent trials and impairments never share or
//! reorder draws regardless of which worker runs them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const STREAM_TRIAL: u64 = 0;
pub const STREAM_NOISE: u64 = 1;
pub const STREAM_FADING: u64 = 2;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-sensitive hash of a list of words.
pub fn mix_seed(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x6A09_E667_F3BC_C908, |acc, &p| splitmix64(acc ^ p))
}
