//! Deterministic stream-indexed random number generation.
//!
//! Every sampling operation takes a `(seed, stream)` pair. The master seed
//! selects the ChaCha key; the stream id selects one of 2^64 independent
//! counter streams. Workers never share generator state: parallel estimators
//! assign one stream per chunk, so results are reproducible regardless of
//! scheduling order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Construct the generator for a given master seed and stream id.
///
/// The same `(seed, stream)` always yields the same sequence.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
