//! Seedable, splittable random streams.
//!
//! Every chain, replicate and grid point draws from its own ChaCha stream
//! keyed by `(seed, stream)`. ChaCha is counter based, so a stream's output
//! does not depend on how many other streams were used or in which order,
//! which keeps parallel runs schedule independent.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Packs a replicate index and a sub-stream tag into one stream id.
pub fn replicate_stream(replicate: u64, tag: u8) -> u64 {
    (replicate << 8) | u64::from(tag)
}
