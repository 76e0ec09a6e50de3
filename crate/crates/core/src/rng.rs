//! Reproducible random streams.
//!
//! Every Monte Carlo task draws from its own ChaCha8 stream keyed by
//! `(seed, task_index)`. ChaCha is counter based, so the numbers a task sees do
//! not depend on how tasks are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seed used when a run does not specify one.
pub const DEFAULT_SEED: u64 = 0x5EED_0F_0A7C;

pub fn stream(seed: u64, task_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(task_index);
    rng
}
