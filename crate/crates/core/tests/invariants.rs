//! Structural identities of the single-excitation dynamics on randomized
//! instances, and closed forms against quadrature.

mod common;

use common::{integrate, random_instance, rng};
use nalgebra::DMatrix;
use num_complex::Complex64;
use spinscape::{EigenSystem, SpinNetwork, Topology};

#[test]
fn propagator_matches_matrix_exponential() {
    let mut r = rng(21);
    for _ in 0..100 {
        let inst = random_instance(&mut r, 2..=10, 6.0);
        let h = inst.net.hamiltonian(&inst.bias).unwrap();
        let eig = EigenSystem::new(&h, None).unwrap();
        let generator: DMatrix<Complex64> = h.matrix().map(|x| Complex64::new(0.0, -inst.t * x));
        let oracle = generator.exp();
        let u = eig.propagator(inst.t);
        assert!((u - oracle).norm() < 1e-10);
    }
}

#[test]
fn universal_invariants() {
    let mut r = rng(22);
    for _ in 0..500 {
        let inst = random_instance(&mut r, 2..=14, 12.0);
        let eig = EigenSystem::from_network(&inst.net, &inst.bias).unwrap();
        let dim = eig.dim();

        let u = eig.propagator(inst.t);
        let unitarity = (u.adjoint() * &u - DMatrix::<Complex64>::identity(dim, dim)).norm();
        assert!(unitarity < 1e-12, "unitarity {unitarity:e}");

        let total: f64 = (0..dim).map(|k| eig.fidelity(inst.m, k, inst.t)).sum();
        assert!((total - 1.0).abs() < 1e-12);

        let identity =
            (0..eig.groups().len()).fold(DMatrix::zeros(dim, dim), |acc, k| acc + eig.projector(k));
        assert!((identity - DMatrix::<f64>::identity(dim, dim)).norm() < 1e-12);

        let c = eig.projections(inst.m, inst.n);
        assert!(c.iter().sum::<f64>().abs() < 1e-12);

        let bound: f64 = c.iter().map(|x| x.abs()).sum();
        assert!(bound <= 1.0 + 1e-12);
        assert!(eig.transfer_amplitude(inst.m, inst.n, inst.t).norm() <= bound + 1e-12);
        assert!(eig.avg_fidelity(inst.m, inst.n, inst.t, 0.3).unwrap() <= bound * bound + 1e-12);
    }
}

#[test]
fn avg_fidelity_matches_quadrature() {
    let mut r = rng(23);
    for i in 0..200 {
        let inst = random_instance(&mut r, 2..=10, 10.0);
        let eig = EigenSystem::from_network(&inst.net, &inst.bias).unwrap();
        let half_width = if i % 2 == 0 { 0.05 } else { inst.t };
        let closed = eig
            .avg_fidelity(inst.m, inst.n, inst.t, half_width)
            .unwrap();
        let integral = integrate(
            |t| eig.fidelity(inst.m, inst.n, t),
            inst.t - half_width,
            inst.t + half_width,
            1e-13,
        );
        let oracle = integral / (2.0 * half_width);
        assert!((closed - oracle).abs() < 1e-9, "{closed} vs {oracle}");
    }
}

#[test]
fn localization_matches_quadrature() {
    let net = SpinNetwork::new(6, Topology::Ring, 0.0).unwrap();
    let mut r = rng(24);
    let bias = common::random_bias(&mut r, 6, 2.0);
    let eig = EigenSystem::from_network(&net, &bias).unwrap();
    let hold = 40.0;
    let oracle = integrate(|t| eig.fidelity(2, 2, t), 0.0, hold, 1e-12) / hold;
    assert!((eig.localization_objective(2, hold).unwrap() - oracle).abs() < 1e-9);
}

#[test]
fn two_spin_closed_form() {
    let net = SpinNetwork::new(2, Topology::Chain, 0.0).unwrap();
    let mut r = rng(25);
    for _ in 0..100 {
        use rand::Rng;
        let d1 = r.random_range(-4.0..4.0);
        let d2 = r.random_range(-4.0..4.0);
        let t = r.random_range(0.0..10.0);
        let eig =
            EigenSystem::from_network(&net, &spinscape::BiasVector::new(vec![d1, d2]).unwrap())
                .unwrap();
        let omega = ((d2 - d1) * (d2 - d1) + 4.0f64).sqrt();
        let expected = (2.0 / omega).powi(2) * (0.5 * omega * t).sin().powi(2);
        assert!((eig.fidelity(0, 1, t) - expected).abs() < 1e-12);
    }
}
