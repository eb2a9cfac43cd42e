//! Spectral evaluation of propagators and transfer fidelities.
//!
//! Everything is computed from one eigendecomposition of `H_D`; the
//! propagator is `U(t) = sum_k exp(-i t lambda_k) Pi_k`.

use std::ops::Range;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{HamiltonianMatrix, SpinNetwork};
use crate::sinc::sinc;

/// Relative gap below which adjacent eigenvalues are one eigenspace.
pub const DEFAULT_DEGENERACY_RTOL: f64 = 1e-9;

/// A cluster of (numerically) equal eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenGroup {
    pub indices: Range<usize>,
    pub value: f64,
}

/// Ascending eigenvalues, orthonormal eigenvectors (columns) and the
/// eigenspace partition of a real symmetric Hamiltonian.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    eigenvalues: Vec<f64>,
    vectors: DMatrix<f64>,
    groups: Vec<EigenGroup>,
    degeneracy_tol: f64,
}

impl EigenSystem {
    /// Diagonalizes `h`. With `degeneracy_tol = None` the tolerance is
    /// `1e-9 * max(1, spectral radius)`.
    pub fn new(h: &HamiltonianMatrix, degeneracy_tol: Option<f64>) -> Result<Self> {
        let m = h.matrix();
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical(
                "Hamiltonian has non-finite entries".into(),
            ));
        }
        let dim = m.nrows();
        let decomposition =
            SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0).ok_or_else(|| {
                Error::Numerical(format!(
                    "symmetric eigensolver did not converge (dim {dim}, max |h| {:.3e})",
                    m.amax()
                ))
            })?;

        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| {
            decomposition.eigenvalues[a].total_cmp(&decomposition.eigenvalues[b])
        });

        let eigenvalues: Vec<f64> = order
            .iter()
            .map(|&i| decomposition.eigenvalues[i])
            .collect();
        let mut vectors = DMatrix::zeros(dim, dim);
        for (col, &src) in order.iter().enumerate() {
            let v = decomposition.eigenvectors.column(src);
            // Largest-magnitude entry positive; first index wins ties.
            let mut pivot = 0;
            for i in 1..dim {
                if v[i].abs() > v[pivot].abs() {
                    pivot = i;
                }
            }
            let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
            for i in 0..dim {
                vectors[(i, col)] = sign * v[i];
            }
        }
        if eigenvalues.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical(
                "eigensolver produced non-finite eigenvalues".into(),
            ));
        }

        let radius = eigenvalues.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        let degeneracy_tol = degeneracy_tol.unwrap_or(DEFAULT_DEGENERACY_RTOL * radius.max(1.0));
        let groups = group_eigenvalues(&eigenvalues, degeneracy_tol);

        Ok(Self {
            eigenvalues,
            vectors,
            groups,
            degeneracy_tol,
        })
    }

    /// Convenience: build `H_D` for `net` and `bias` and diagonalize it.
    pub fn from_network(net: &SpinNetwork, bias: &crate::network::BiasVector) -> Result<Self> {
        Self::new(&net.hamiltonian(bias)?, None)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Column `k` is the eigenvector of `eigenvalues()[k]`.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn groups(&self) -> &[EigenGroup] {
        &self.groups
    }

    pub fn degeneracy_tol(&self) -> f64 {
        self.degeneracy_tol
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.groups.len() == self.eigenvalues.len()
    }

    /// Per-eigenvector overlaps `(v_k)_n (v_k)_m`.
    pub fn overlaps(&self, m: usize, n: usize) -> Vec<f64> {
        (0..self.dim())
            .map(|k| self.vectors[(n, k)] * self.vectors[(m, k)])
            .collect()
    }

    /// `<n|Pi_k|m>` for every eigenspace `k`.
    pub fn projections(&self, m: usize, n: usize) -> Vec<f64> {
        self.groups
            .iter()
            .map(|g| {
                g.indices
                    .clone()
                    .map(|i| self.vectors[(n, i)] * self.vectors[(m, i)])
                    .sum()
            })
            .collect()
    }

    /// Orthogonal projector onto eigenspace `k`.
    pub fn projector(&self, k: usize) -> DMatrix<f64> {
        let dim = self.dim();
        let mut p = DMatrix::zeros(dim, dim);
        for i in self.groups[k].indices.clone() {
            let v = self.vectors.column(i);
            p += v * v.transpose();
        }
        p
    }

    /// Full propagator `U(t)`.
    pub fn propagator(&self, t: f64) -> DMatrix<Complex64> {
        let dim = self.dim();
        let mut u = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, -t * lambda);
            for i in 0..dim {
                let vi = self.vectors[(i, k)];
                if vi == 0.0 {
                    continue;
                }
                for j in 0..dim {
                    u[(i, j)] += phase * (vi * self.vectors[(j, k)]);
                }
            }
        }
        u
    }

    /// `<n|U(t)|m>`.
    pub fn transfer_amplitude(&self, m: usize, n: usize, t: f64) -> Complex64 {
        self.eigenvalues
            .iter()
            .enumerate()
            .map(|(k, &lambda)| {
                Complex64::from_polar(self.vectors[(n, k)] * self.vectors[(m, k)], -t * lambda)
            })
            .sum()
    }

    /// Transfer probability `|<n|U(t)|m>|^2`.
    pub fn fidelity(&self, m: usize, n: usize, t: f64) -> f64 {
        self.transfer_amplitude(m, n, t).norm_sqr().clamp(0.0, 1.0)
    }

    /// `1 - p(n <- m, t)` without cancellation near perfect transfer, from
    /// `1 - |a| = 1/2 sum_k (|v_mk| - |v_nk|)^2 + sum_k |c_k| 2 sin^2(psi_k/2)`
    /// where `psi_k` is the phase of `c_k e^{-i t l_k}` relative to `a`.
    /// For `m == n` the first sum is exactly zero.
    pub fn infidelity(&self, m: usize, n: usize, t: f64) -> f64 {
        let a = self.transfer_amplitude(m, n, t);
        let norm = a.norm();
        if norm < 0.5 {
            return 1.0 - norm * norm;
        }
        let rotation = a.conj() / norm;
        let mut amplitude_gap = 0.0;
        let mut phase_gap = 0.0;
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let (vm, vn) = (self.vectors[(m, k)], self.vectors[(n, k)]);
            let d = vm.abs() - vn.abs();
            amplitude_gap += 0.5 * d * d;
            let c = vm * vn;
            if c == 0.0 {
                continue;
            }
            let psi = (Complex64::from_polar(c, -t * lambda) * rotation).arg();
            let half = (0.5 * psi).sin();
            phase_gap += c.abs() * 2.0 * half * half;
        }
        let deficit = amplitude_gap + phase_gap;
        (deficit * (2.0 - deficit)).clamp(0.0, 1.0)
    }

    /// Mean of the transfer probability over `[t - half_width, t + half_width]`:
    /// `sum_{k,l} c_k c_l cos(w_kl t) sinc(w_kl half_width)`.
    pub fn avg_fidelity(&self, m: usize, n: usize, t: f64, half_width: f64) -> Result<f64> {
        if !(half_width > 0.0) {
            return Err(Error::Domain(format!(
                "readout half-width must be positive, got {half_width}"
            )));
        }
        let c = self.overlaps(m, n);
        let lambda = &self.eigenvalues;
        let mut total = 0.0;
        for k in 0..c.len() {
            if c[k] == 0.0 {
                continue;
            }
            total += c[k] * c[k];
            for l in k + 1..c.len() {
                let w = lambda[k] - lambda[l];
                total += 2.0 * c[k] * c[l] * (w * t).cos() * sinc(w * half_width);
            }
        }
        Ok(total.clamp(0.0, 1.0))
    }

    /// Probability of finding the excitation at `node` averaged over `[0, hold]`.
    pub fn localization_objective(&self, node: usize, hold: f64) -> Result<f64> {
        if !(hold > 0.0) {
            return Err(Error::Domain(format!(
                "holding time must be positive, got {hold}"
            )));
        }
        self.avg_fidelity(node, node, 0.5 * hold, 0.5 * hold)
    }

    /// Global phase minimizing the tracking error, `-arg <n|U(t)|m>` (0 when
    /// the amplitude vanishes).
    pub fn optimal_phase(&self, m: usize, n: usize, t: f64) -> f64 {
        let a = self.transfer_amplitude(m, n, t);
        if a.norm() == 0.0 {
            0.0
        } else {
            -a.arg()
        }
    }

    /// `|| |n> - e^{i phi} U(t)|m> ||^2`; with `phase = None` the minimizing
    /// phase is used and the error reduces to `2 - 2|<n|U(t)|m>|`.
    pub fn tracking_error(&self, m: usize, n: usize, t: f64, phase: Option<f64>) -> f64 {
        match phase {
            None => (2.0 - 2.0 * self.transfer_amplitude(m, n, t).norm()).max(0.0),
            Some(phi) => (0..self.dim())
                .map(|k| {
                    let rotated = Complex64::from_polar(
                        self.vectors[(m, k)],
                        -(t * self.eigenvalues[k] - phi),
                    );
                    (Complex64::new(self.vectors[(n, k)], 0.0) - rotated).norm_sqr()
                })
                .sum(),
        }
    }
}

fn group_eigenvalues(eigenvalues: &[f64], tol: f64) -> Vec<EigenGroup> {
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=eigenvalues.len() {
        if i == eigenvalues.len() || eigenvalues[i] - eigenvalues[i - 1] > tol {
            let slice = &eigenvalues[start..i];
            groups.push(EigenGroup {
                indices: start..i,
                value: slice.iter().sum::<f64>() / slice.len() as f64,
            });
            start = i;
        }
    }
    groups
}

/// Input node, output node and time specification of a transfer problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferTask {
    /// 0-based input node.
    pub input: usize,
    /// 0-based output node.
    pub output: usize,
    pub time: TimeSpec,
    /// Readout half-width `delta T`; `None` for instantaneous readout.
    pub window: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum TimeSpec {
    Fixed { t: f64 },
    Free { lo: f64, hi: f64 },
}

impl TransferTask {
    pub fn new(
        net: &SpinNetwork,
        input: usize,
        output: usize,
        time: TimeSpec,
        window: Option<f64>,
    ) -> Result<Self> {
        net.check_node(input)?;
        net.check_node(output)?;
        match time {
            TimeSpec::Fixed { t } if !(t >= 0.0 && t.is_finite()) => {
                return Err(Error::Domain(format!(
                    "transfer time must be finite and >= 0, got {t}"
                )));
            }
            TimeSpec::Free { lo, hi } if !(lo >= 0.0 && hi > lo) => {
                return Err(Error::Domain(format!("invalid time range [{lo}, {hi}]")));
            }
            _ => {}
        }
        if let Some(w) = window {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Domain(format!(
                    "readout half-width must be positive, got {w}"
                )));
            }
        }
        Ok(Self {
            input,
            output,
            time,
            window,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{BiasVector, Topology};
    use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

    fn eig(n: usize, topology: Topology, d: Vec<f64>) -> EigenSystem {
        let net = SpinNetwork::new(n, topology, 0.0).unwrap();
        EigenSystem::from_network(&net, &BiasVector::new(d).unwrap()).unwrap()
    }

    #[test]
    fn three_chain_spectrum() {
        let e = eig(3, Topology::Chain, vec![0.0; 3]);
        let expected = [-SQRT_2, 0.0, SQRT_2];
        for (a, b) in e.eigenvalues().iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn rabi_pair_spectrum() {
        let c = 0.7;
        let e = eig(2, Topology::Chain, vec![c, c]);
        assert!((e.eigenvalues()[0] - (c - 1.0)).abs() < 1e-14);
        assert!((e.eigenvalues()[1] - (c + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn five_ring_groups_match_circulant_spectrum() {
        let e = eig(5, Topology::Ring, vec![0.0; 5]);
        assert_eq!(e.groups().len(), 3);
        let mut expected: Vec<f64> = (0..5)
            .map(|k| 2.0 * (2.0 * PI * k as f64 / 5.0).cos())
            .collect();
        expected.sort_by(f64::total_cmp);
        for (a, b) in e.eigenvalues().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn amplitude_at_zero_time() {
        let e = eig(6, Topology::Ring, vec![0.3, -1.0, 2.0, 0.0, 0.5, 1.1]);
        assert!((e.transfer_amplitude(2, 2, 0.0) - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(e.transfer_amplitude(2, 4, 0.0).norm() < 1e-14);
        assert!(e.fidelity(1, 3, 0.0) < 1e-28);
    }

    #[test]
    fn two_spin_perfect_transfer() {
        let e = eig(2, Topology::Chain, vec![0.4, 0.4]);
        assert!((e.transfer_amplitude(0, 1, FRAC_PI_2).norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn three_chain_closed_form() {
        let e = eig(3, Topology::Chain, vec![0.0; 3]);
        for i in 0..50 {
            let t = 0.17 * i as f64;
            let expected = (0.5 * SQRT_2 * t).sin().powi(4);
            assert!((e.fidelity(0, 2, t) - expected).abs() < 1e-13);
        }
        assert!(e.fidelity(0, 2, PI / SQRT_2) > 1.0 - 1e-14);
    }

    #[test]
    fn avg_fidelity_rejects_nonpositive_window() {
        let e = eig(3, Topology::Chain, vec![0.0; 3]);
        assert!(matches!(
            e.avg_fidelity(0, 2, 1.0, 0.0),
            Err(Error::Domain(_))
        ));
        assert!(e.localization_objective(0, -1.0).is_err());
    }

    #[test]
    fn narrow_window_recovers_instantaneous() {
        let e = eig(5, Topology::Ring, vec![0.2, -0.4, 1.0, 0.0, 0.7]);
        let p = e.fidelity(0, 2, 3.1);
        let avg = e.avg_fidelity(0, 2, 3.1, 1e-6).unwrap();
        assert!((p - avg).abs() < 1e-9);
    }

    #[test]
    fn accurate_infidelity_agrees_with_fidelity() {
        let e = eig(5, Topology::Ring, vec![0.3, -1.1, 2.0, 0.4, 0.9]);
        for &(m, n) in &[(0, 2), (1, 1), (3, 4)] {
            for &t in &[0.0, 0.7, 3.1, 11.0] {
                assert!((e.infidelity(m, n, t) - (1.0 - e.fidelity(m, n, t))).abs() < 1e-14);
            }
        }
        let chain = eig(3, Topology::Chain, vec![0.0; 3]);
        let t = PI / std::f64::consts::SQRT_2;
        assert!(chain.infidelity(0, 2, t) < 1e-28);
        assert!(chain.infidelity(0, 2, t + 1e-9) > 0.0);
    }

    #[test]
    fn two_spin_localization_tends_to_half() {
        let e = eig(2, Topology::Chain, vec![0.0, 0.0]);
        // p(1<-1, t) = cos^2 t, whose mean over [0, T] is 1/2 + sin(2T)/(4T).
        let hold: f64 = 1000.0;
        let expected = 0.5 + (2.0 * hold).sin() / (4.0 * hold);
        assert!((e.localization_objective(0, hold).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn tracking_error_special_cases() {
        let e = eig(3, Topology::Chain, vec![0.0; 3]);
        let t = PI / SQRT_2;
        assert!(e.tracking_error(0, 2, t, None) < 1e-10);
        let phi = e.optimal_phase(0, 2, t);
        assert!(e.tracking_error(0, 2, t, Some(phi)) < 1e-10);
        for phi in [0.0, 1.0, -2.5] {
            assert!((e.tracking_error(0, 1, 0.0, Some(phi)) - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn task_validation() {
        let net = SpinNetwork::new(5, Topology::Ring, 0.0).unwrap();
        assert!(TransferTask::new(&net, 0, 5, TimeSpec::Fixed { t: 1.0 }, None).is_err());
        assert!(TransferTask::new(&net, 0, 2, TimeSpec::Free { lo: 3.0, hi: 1.0 }, None).is_err());
        assert!(TransferTask::new(&net, 0, 2, TimeSpec::Fixed { t: 1.0 }, Some(0.0)).is_err());
    }
}
