//! Reproducible random streams.
//!
//! Every random draw in a fit comes from ChaCha20 keyed by the user seed
//! (expanded with `SeedableRng::seed_from_u64`) and running on stream
//! number `restart`. The same `(seed, restart)` pair yields the same
//! sequence on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Recorded alongside fitted models.
pub const RNG_ALGORITHM: &str = "chacha20/rand_chacha-0.9/seed_from_u64/stream=restart";

pub type StreamRng = ChaCha20Rng;

pub fn stream(seed: u64, restart: u64) -> StreamRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(restart);
    rng
}
