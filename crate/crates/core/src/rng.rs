//! Seeded random streams.
//!
//! Every consumer of randomness in a run draws from its own ChaCha stream
//! derived from the run seed, so that e.g. regenerating the environment from
//! a snapshot does not shift the simulation's draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Independent stream identifiers of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Environment = 1,
    Bootstrap = 2,
    Simulation = 3,
}

pub fn stream(seed: u64, which: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

/// Child generator seeded from a parent stream (per-forager substreams).
pub fn substream(parent: &mut SimRng) -> SimRng {
    use rand::RngCore;
    ChaCha8Rng::seed_from_u64(parent.next_u64())
}
