//! Seeded random streams.
//!
//! Every run derives its randomness from one 64-bit seed. Independent
//! streams (experiment grid cells, presets) are ChaCha8 generators keyed by
//! the seed and selected by the ChaCha stream id, so stream `k` of seed `s`
//! is reproducible on its own without replaying any other stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id for grid cell `cell` of a sub-experiment `tag`.
pub fn cell_stream(tag: u32, cell: u32) -> u64 {
    ((tag as u64) << 32) | cell as u64
}
