//! Fixtures shared by the benchmarks.

use spinscape::{BiasVector, SpinNetwork, Topology};

/// Ring of `n_spins` with a fixed, non-symmetric bias pattern.
pub fn ring_fixture(n_spins: usize) -> (SpinNetwork, BiasVector) {
    let net = SpinNetwork::new(n_spins, Topology::Ring, 0.0).expect("ring size");
    let bias = (0..n_spins)
        .map(|k| ((k * 7919) % 13) as f64 * 0.37 - 2.1)
        .collect();
    (net, BiasVector::new(bias).expect("finite bias"))
}
