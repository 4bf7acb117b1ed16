//! Deterministic random streams.
//!
//! Every consumer gets its own ChaCha8 stream keyed by `(seed, stream id)`, so
//! results never depend on the order in which parallel work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const EXPERIMENT_STREAMS: u64 = 0x1_0000;
pub(crate) const BOOTSTRAP_STREAMS: u64 = 0x2_0000_0000;
pub(crate) const PIPELINE_STREAM: u64 = 0x3_0000_0000;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
