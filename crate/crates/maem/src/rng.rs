//! Deterministic RNG streams.
//!
//! Every stochastic task (one trajectory, one grid-cell realization, one
//! random-walk walker) draws from its own stream, derived from the master
//! seed plus a domain tag and the task's own identifying keys. Streams are
//! independent of scheduling and of how many sibling tasks exist: a grid
//! cell's stream depends only on its own (mu, alpha, realization), never on
//! its position in the grid.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags keep streams from different experiment parts disjoint even
/// when their keys collide. Values are stable identifiers; do not reorder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Trajectory = 1,
    PhaseGridCell = 2,
    FiniteSize = 3,
    GrwWalker = 4,
    Transient = 5,
}

/// SplitMix64 finalizer; a bijective 64-bit mixer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a reproducible generator for one task.
///
/// The master seed, domain tag, and each key are absorbed through the
/// SplitMix64 mixer, then expanded into a full 256-bit ChaCha seed.
pub fn stream_rng(master_seed: u64, domain: Domain, keys: &[u64]) -> ChaCha8Rng {
    let mut h = splitmix64(master_seed ^ (domain as u64));
    for &k in keys {
        h = splitmix64(h ^ splitmix64(k));
    }
    let mut seed = [0u8; 32];
    let mut state = h;
    for chunk in seed.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}
