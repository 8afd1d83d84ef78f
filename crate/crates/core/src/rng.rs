//! Seeded random streams.
//!
//! Stream `i` of seed `s` is ChaCha20 keyed by `s` with stream id `i`, so
//! worker `i` draws the same numbers however many threads run.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type Rng = ChaCha20Rng;

pub fn seeded(seed: u64) -> Rng {
    stream(seed, 0)
}

pub fn stream(seed: u64, index: u64) -> Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
