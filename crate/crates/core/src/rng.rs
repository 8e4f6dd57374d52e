//! Seeded random streams.
//!
//! Every randomized routine takes a `u64` seed and builds its own ChaCha20
//! stream, so results replay exactly across platforms and thread schedules.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type Rng = ChaCha20Rng;

/// Identifier recorded in configs and reports.
pub const RNG_ALGORITHM: &str = "chacha20";

pub fn seeded(seed: u64) -> Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Independent stream for sub-task `index` of a run seeded with `seed`.
pub fn substream(seed: u64, index: u64) -> Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1));
    rng
}
