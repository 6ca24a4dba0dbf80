//! Counter-based seeding.
//!
//! Every consumer of randomness draws from its own ChaCha stream, addressed
//! by `(master seed, purpose, index)`. Changing how much one component draws
//! never shifts the numbers seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Topology = 1,
    Data = 2,
    Minibatch = 3,
    Init = 4,
    Partition = 5,
    Trajectory = 6,
    Holdout = 7,
}

/// Deterministic RNG stream for `(master, purpose, index)`.
pub fn stream(master: u64, purpose: Purpose, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(((purpose as u64) << 48) | (index & 0xFFFF_FFFF_FFFF));
    rng
}
