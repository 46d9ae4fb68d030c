//! Counter-based generator substreams.
//!
//! ChaCha keyed by the master seed provides 2^64 independent streams; path
//! `i` always draws from stream `i`, so its randomness does not depend on
//! which worker thread happens to execute it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for one path of an ensemble.
pub fn substream(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}
