//! Seed derivation. Every random consumer in a run draws from its own
//! ChaCha stream keyed by the experiment seed, so adding a consumer never
//! perturbs the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const STREAM_MODEL_INIT: u64 = 0;
pub const STREAM_PARTITION: u64 = 1;
pub const STREAM_DATASET: u64 = 2;
pub const STREAM_SPLIT: u64 = 3;
pub const STREAM_CHANNEL: u64 = 4;
const STREAM_CLIENT_BASE: u64 = 100;

pub fn derive_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Training rng owned by client `client_id`.
pub fn client_rng(seed: u64, client_id: usize) -> ChaCha8Rng {
    derive_rng(seed, STREAM_CLIENT_BASE + client_id as u64)
}
