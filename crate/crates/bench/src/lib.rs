//! Seeded network generators shared by the benchmarks.

use netcoh::Network;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random directed network on `n` nodes where each ordered pair (self-loops
/// included) carries an edge with probability `density`. Costs are drawn
/// uniformly from `lo..hi`. A ring `i -> i+1` is always present so the
/// capacity matrix is irreducible.
pub fn random_network(n: usize, density: f64, lo: f64, hi: f64, seed: u64) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if j == (i + 1) % n || rng.random::<f64>() < density {
                edges.push((i, j, rng.random_range(lo..hi)));
            }
        }
    }
    Network::from_indices(n, &edges).expect("generated network is valid")
}

/// Acyclic network: edges only go from lower to higher index.
pub fn random_dag(n: usize, density: f64, lo: f64, hi: f64, seed: u64) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < density {
                edges.push((i, j, rng.random_range(lo..hi)));
            }
        }
    }
    Network::from_indices(n, &edges).expect("generated network is valid")
}
