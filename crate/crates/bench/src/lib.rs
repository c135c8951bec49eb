//! Fixtures shared by the criterion benches.

use mfgnet::netmodel::examples::braess;
use mfgnet::netmodel::generate::{random_network, RandomNetOptions};
use mfgnet::wardrop_net::{transform, DirectedNet};

pub fn braess_directed(bridge: bool) -> DirectedNet {
    transform(&braess(bridge, 0.0)).expect("braess transforms")
}

/// Random network with roughly `size` basic edges.
pub fn random_directed(seed: u64, size: usize) -> DirectedNet {
    let opts = RandomNetOptions {
        vertices: (size / 2 + 2, size / 2 + 2),
        basic_edges: (size, size),
        ..RandomNetOptions::default()
    };
    transform(&random_network(seed, &opts)).expect("random nets transform")
}

/// `n` currents spaced logarithmically over [1e-2, 1e2].
pub fn log_grid(n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / (n - 1) as f64))
        .collect()
}
