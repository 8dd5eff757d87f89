//! Seeded inputs shared by the benchmarks.

use dsdkit::{fixtures, StochasticMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Sizes swept by the size-dependent benchmarks.
pub const SIZES: [usize; 4] = [10, 30, 100, 300];

/// Irreducible aperiodic chain on `n` states, identical across runs.
pub fn chain(n: usize) -> StochasticMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
    fixtures::random_aperiodic(&mut rng, n)
}
