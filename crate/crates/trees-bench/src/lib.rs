//! Deterministic input builders shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trees_core::apps::GraphCsr;

pub fn random_values(len: usize, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.gen()).collect()
}

pub fn random_graph(vertices: usize, edges: usize, seed: u64) -> GraphCsr {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edge_list: Vec<(u64, u64, u64)> = (0..edges)
        .map(|_| {
            (
                rng.gen_range(0..vertices) as u64,
                rng.gen_range(0..vertices) as u64,
                rng.gen_range(1..=16),
            )
        })
        .collect();
    GraphCsr::from_edges(vertices, &edge_list).expect("generated edges are in range")
}

pub fn random_signal(len: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}
