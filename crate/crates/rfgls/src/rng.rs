//! Deterministic counter-keyed random streams. Every unit of parallel work
//! (tree, replicate) gets its own stream derived from a base seed and an
//! index, so results do not depend on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Independent stream `idx` of the generator keyed by `seed`.
pub fn stream(seed: u64, idx: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(idx);
    rng
}
