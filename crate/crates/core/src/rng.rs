//! Seeded random streams. Everything stochastic in the crate takes an
//! explicit generator; these helpers fix the algorithm so runs reproduce.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StdRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> StdRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` under `seed`; used to give each posterior
/// draw or chain its own generator.
pub fn substream(seed: u64, stream: u64) -> StdRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}
