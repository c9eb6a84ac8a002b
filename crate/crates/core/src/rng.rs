//! Reproducible random streams.
//!
//! Every random draw in the crate flows from a `(seed, stream)` pair. The
//! underlying generator is ChaCha8, which is counter based: the 64-bit stream
//! id selects an independent keystream for the same key, so replica `i` of an
//! experiment can be regenerated in isolation and in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Fold a path of labels (experiment, component, replica, ...) into one stream id.
pub fn stream_id(path: &[u64]) -> u64 {
    path.iter()
        .fold(0x5851_f42d_4c95_7f2d, |acc, &x| splitmix64(acc ^ splitmix64(x)))
}

/// Generator for `(seed, stream)`.
pub fn stream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generator for `(seed, stream_id(path))`.
pub fn substream(seed: u64, path: &[u64]) -> StreamRng {
    stream(seed, stream_id(path))
}

/// Stable label for a string tag, used as the first component of stream paths.
pub fn label(tag: &str) -> u64 {
    tag.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}
