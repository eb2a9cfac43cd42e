//! Property-based checks of the model invariants.

use proptest::prelude::*;
use spinscape::gradients::grad_fidelity_bias;
use spinscape::{BiasVector, EigenSystem, SpinNetwork, SymmetryOrbits, Topology};

fn network() -> impl Strategy<Value = SpinNetwork> {
    (2usize..=12, prop::bool::ANY).prop_map(|(n, ring)| {
        let topology = if ring {
            Topology::Ring
        } else {
            Topology::Chain
        };
        SpinNetwork::new(n, topology, 0.0).unwrap()
    })
}

fn network_with_bias() -> impl Strategy<Value = (SpinNetwork, Vec<f64>)> {
    network().prop_flat_map(|net| {
        let n = net.n_spins();
        (Just(net), prop::collection::vec(-5.0f64..5.0, n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hamiltonian_is_symmetric((net, d) in network_with_bias()) {
        let h = net.hamiltonian(&BiasVector::new(d).unwrap()).unwrap();
        let m = h.matrix();
        prop_assert_eq!(m, &m.transpose());
    }

    #[test]
    fn expanded_bias_is_reflection_invariant(
        n_spins in 3usize..=20,
        a in 0usize..20,
        b in 0usize..20,
        seed in prop::collection::vec(-10.0f64..10.0, 20),
    ) {
        let (m, n) = (a % n_spins, b % n_spins);
        let orbits = SymmetryOrbits::ring(n_spins, m, n).unwrap();
        let d = orbits.expand(&seed[..orbits.len()]).unwrap();
        for i in 0..n_spins {
            prop_assert_eq!(d[i], d[orbits.reflect(i)]);
            prop_assert_eq!(orbits.reflect(orbits.reflect(i)), i);
        }
        prop_assert_eq!(orbits.reflect(m), n);
        let covered: usize = orbits.orbits().iter().map(Vec::len).sum();
        prop_assert_eq!(covered, n_spins);
    }

    #[test]
    fn uniform_shift_is_a_null_direction(
        (net, d) in network_with_bias(),
        shift in -20.0f64..20.0,
        t in 0.0f64..15.0,
        a in 0usize..12,
        b in 0usize..12,
    ) {
        let size = net.n_spins();
        let (m, n) = (a % size, b % size);
        let bias = BiasVector::new(d).unwrap();
        let eig = EigenSystem::from_network(&net, &bias).unwrap();
        let shifted = EigenSystem::from_network(&net, &bias.shifted(shift)).unwrap();
        prop_assert!((eig.fidelity(m, n, t) - shifted.fidelity(m, n, t)).abs() < 1e-10);
        let g = grad_fidelity_bias(&eig, m, n, t);
        prop_assert!(g.iter().sum::<f64>().abs() < 1e-9);
    }

    #[test]
    fn fidelity_is_a_probability(
        (net, d) in network_with_bias(),
        t in 0.0f64..50.0,
        w in 0.0f64..5.0,
        a in 0usize..12,
        b in 0usize..12,
    ) {
        let size = net.n_spins();
        let (m, n) = (a % size, b % size);
        let eig = EigenSystem::from_network(&net, &BiasVector::new(d).unwrap()).unwrap();
        let p = eig.fidelity(m, n, t);
        prop_assert!((0.0..=1.0).contains(&p));
        let avg = eig.avg_fidelity(m, n, t.max(w), w).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&avg));
    }

    #[test]
    fn transfer_is_reciprocal((net, d) in network_with_bias(), t in 0.0f64..20.0, a in 0usize..12, b in 0usize..12) {
        let size = net.n_spins();
        let (m, n) = (a % size, b % size);
        let eig = EigenSystem::from_network(&net, &BiasVector::new(d).unwrap()).unwrap();
        prop_assert!((eig.fidelity(m, n, t) - eig.fidelity(n, m, t)).abs() < 1e-12);
    }
}
