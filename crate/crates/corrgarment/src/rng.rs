//! Seeded RNG streams.
//!
//! Every stochastic step in the pipeline draws from a ChaCha stream derived
//! from a master seed and a purpose tag, so reruns with the same seed are
//! bit-identical and independent stages never share a stream.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Purpose tags for derived streams. Batch-indexed streams add the batch
/// number shifted past the tag byte, which keeps every (purpose, index)
/// combination on its own stream.
pub mod purpose {
    pub const SPEC_SAMPLING: u64 = 1;
    pub const SELF_PLAY: u64 = 2;
    pub const RENDER_RESAMPLE: u64 = 3;
    pub const MODEL_INIT: u64 = 4;
    pub const OFFLINE_BATCH: u64 = 5;
    pub const C2F_PROBE: u64 = 6;
    pub const ADAPT_BATCH: u64 = 7;
    pub const EVAL_EPISODE: u64 = 8;
    pub const DROP_POSE: u64 = 9;
}

/// RNG for a (seed, purpose) pair.
pub fn stream(seed: u64, purpose: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(purpose);
    rng
}

/// RNG for a (seed, purpose, index) triple, e.g. one stream per batch.
/// Stateless: batch b of a run is reproducible without replaying batches 0..b.
pub fn indexed_stream(seed: u64, purpose: u64, index: u64) -> ChaCha12Rng {
    stream(seed, purpose | (index << 8))
}
