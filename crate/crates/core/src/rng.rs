//! Seeded random streams.
//!
//! Every random quantity in an experiment is drawn from a ChaCha8 stream
//! identified by `(seed, purpose, batch)`. Streams never depend on thread
//! count or on the position of a point inside a sweep, so the same
//! operating point always sees the same samples.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Sensing = 1,
    Training = 2,
    Evaluation = 3,
    Channel = 4,
    ScalarTraining = 5,
}

/// Samples per batch substream.
pub const BATCH: usize = 1 << 14;

pub fn stream(seed: u64, purpose: Purpose, batch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 40) | batch);
    rng
}
