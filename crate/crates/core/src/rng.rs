//! Deterministic random streams.
//!
//! All randomness in this crate flows through ChaCha8, a counter-based
//! generator: the same seed produces the same stream on every platform.
//! Per-trial streams are derived from `(master_seed, trial_index)` via the
//! generator's 64-bit stream id, so partitioning trials across any number
//! of workers cannot change a single draw.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The concrete generator used everywhere randomness is needed.
pub type Stream = ChaCha8Rng;

/// Root stream for a run.
pub fn master_rng(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent substream for one trial of a seeded experiment.
pub fn trial_rng(master_seed: u64, trial_index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial_index);
    rng
}

/// Stream id reserved for one-off draws (e.g. picking a hidden index for a
/// single run) so they never collide with trial streams 0, 1, 2, ...
pub const RESERVED_STREAM: u64 = u64::MAX;

/// One uniform index in [0, n) from the reserved substream of a seed.
pub fn draw_index(master_seed: u64, n: u64) -> u64 {
    use rand::Rng;
    trial_rng(master_seed, RESERVED_STREAM).random_range(0..n)
}
