//! Analytic derivatives against finite-difference oracles.

mod common;

use common::{derivative, gradient, random_instance, rng};
use nalgebra::DMatrix;
use spinscape::gradients::{
    grad_avg_fidelity, grad_fidelity_bias, grad_fidelity_time, sensitivity,
};
use spinscape::{
    BiasVector, EigenSystem, HamiltonianMatrix, PerturbationStructure, Readout, SensitivityKernel,
    SpinNetwork,
};

fn fidelity_at(net: &SpinNetwork, d: &[f64], m: usize, n: usize, t: f64) -> f64 {
    EigenSystem::from_network(net, &BiasVector::new(d.to_vec()).unwrap())
        .unwrap()
        .fidelity(m, n, t)
}

fn rel_err(analytic: &[f64], oracle: &[f64]) -> f64 {
    let diff = analytic
        .iter()
        .zip(oracle)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let scale = oracle.iter().map(|b| b.abs()).fold(1e-3, f64::max);
    diff / scale
}

#[test]
fn bias_gradient_matches_finite_differences() {
    let mut r = rng(11);
    for _ in 0..100 {
        let inst = random_instance(&mut r, 3..=12, 8.0);
        let eig = EigenSystem::from_network(&inst.net, &inst.bias).unwrap();
        let analytic = grad_fidelity_bias(&eig, inst.m, inst.n, inst.t);
        let h = 1e-3 / inst.t.max(1.0);
        let oracle = gradient(
            |d| fidelity_at(&inst.net, d, inst.m, inst.n, inst.t),
            inst.bias.as_slice(),
            h,
        );
        let err = rel_err(&analytic, &oracle);
        assert!(err < 1e-6, "relative error {err:e}");
        // A uniform shift only changes a global phase.
        assert!(analytic.iter().sum::<f64>().abs() < 1e-10);
    }
}

#[test]
fn time_derivative_matches_finite_differences() {
    let mut r = rng(12);
    for _ in 0..100 {
        let inst = random_instance(&mut r, 3..=12, 8.0);
        let eig = EigenSystem::from_network(&inst.net, &inst.bias).unwrap();
        let analytic = grad_fidelity_time(&eig, inst.m, inst.n, inst.t);
        let oracle = derivative(|t| eig.fidelity(inst.m, inst.n, t), inst.t, 1e-3);
        assert!(
            rel_err(&[analytic], &[oracle]) < 1e-6,
            "{analytic} vs {oracle}"
        );
    }
}

#[test]
fn window_gradients_match_finite_differences() {
    let mut r = rng(13);
    for i in 0..100 {
        let inst = random_instance(&mut r, 3..=12, 8.0);
        let half_width = if i % 2 == 0 { 0.05 } else { 0.2 * inst.t };
        let eig = EigenSystem::from_network(&inst.net, &inst.bias).unwrap();
        let (grad_d, grad_t) = grad_avg_fidelity(&eig, inst.m, inst.n, inst.t, half_width).unwrap();
        let avg = |d: &[f64], t: f64| {
            EigenSystem::from_network(&inst.net, &BiasVector::new(d.to_vec()).unwrap())
                .unwrap()
                .avg_fidelity(inst.m, inst.n, t, half_width)
                .unwrap()
        };
        let h = 1e-3 / (inst.t + half_width).max(1.0);
        let oracle_d = gradient(|d| avg(d, inst.t), inst.bias.as_slice(), h);
        let oracle_t = derivative(|t| avg(inst.bias.as_slice(), t), inst.t, 1e-3);
        assert!(rel_err(&grad_d, &oracle_d) < 1e-6);
        assert!(
            rel_err(&[grad_t], &[oracle_t]) < 1e-6,
            "{grad_t} vs {oracle_t}"
        );
    }
}

fn random_symmetric(r: &mut rand_chacha::ChaCha8Rng, dim: usize) -> DMatrix<f64> {
    use rand::Rng;
    let mut s = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let v = r.random_range(-1.0..1.0);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    s
}

#[test]
fn structured_sensitivity_matches_finite_differences() {
    let mut r = rng(14);
    for i in 0..100 {
        let inst = random_instance(&mut r, 3..=12, 8.0);
        let h0 = inst.net.hamiltonian(&inst.bias).unwrap();
        let dim = h0.dim();
        let s = random_symmetric(&mut r, dim);
        let readout = if i % 3 == 0 {
            Readout::Window {
                t: inst.t,
                half_width: 0.1,
            }
        } else {
            Readout::Instant { t: inst.t }
        };
        let eig = EigenSystem::new(&h0, None).unwrap();
        let structure = PerturbationStructure::Matrix(s.clone());
        let analytic =
            SensitivityKernel::new(&eig, inst.m, inst.n, readout).sensitivity(&structure);
        let value = |delta: f64| {
            let h = HamiltonianMatrix::from_matrix(h0.matrix() + &s * delta).unwrap();
            readout.value(&EigenSystem::new(&h, None).unwrap(), inst.m, inst.n)
        };
        let oracle = derivative(value, 0.0, 1e-3 / (inst.t + 0.1).max(1.0));
        assert!(
            rel_err(&[analytic], &[oracle]) < 1e-6,
            "{analytic} vs {oracle}"
        );
        if let Readout::Instant { t } = readout {
            assert_eq!(analytic, sensitivity(&eig, inst.m, inst.n, t, &structure));
        }
    }
}

#[test]
fn window_gradient_is_stable_near_degeneracy() {
    // Two eigenvalues split by a tiny bias difference in a 4-ring.
    let net = SpinNetwork::new(4, spinscape::Topology::Ring, 0.0).unwrap();
    for &eps in &[1e-3, 1e-6, 1e-9, 1e-12, 0.0] {
        let bias = BiasVector::new(vec![0.0, eps, 0.0, -eps]).unwrap();
        let eig = EigenSystem::from_network(&net, &bias).unwrap();
        let (g, _) = grad_avg_fidelity(&eig, 0, 1, 3.0, 0.5).unwrap();
        let oracle = gradient(
            |d| {
                EigenSystem::from_network(&net, &BiasVector::new(d.to_vec()).unwrap())
                    .unwrap()
                    .avg_fidelity(0, 1, 3.0, 0.5)
                    .unwrap()
            },
            bias.as_slice(),
            1e-3,
        );
        assert!(g.iter().all(|x| x.is_finite()));
        assert!(
            rel_err(&g, &oracle) < 1e-6,
            "eps={eps}: {g:?} vs {oracle:?}"
        );
    }
}
