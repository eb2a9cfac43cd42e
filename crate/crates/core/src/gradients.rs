//! Exact first derivatives of the transfer objectives.
//!
//! Every derivative here is a linear functional of the perturbation
//! structure `S`: `dp/d delta = sum_ij S_ij G_ij` with
//! `G = V K V^T`, where `K` is built in the eigenbasis from the divided
//! differences of the phase factors. For instantaneous readout
//!
//! ```text
//! K_kl = -2T (v_k)_n (v_l)_m sinc(T w_kl / 2) sum_j c_j sin(T((l_k + l_l)/2 - l_j))
//! ```
//!
//! and for a readout window the `t`-dependent divided difference is replaced
//! by its window average. Degenerate pairs fall out of the same expressions
//! through the sinc limit, so no eigenvector derivatives are needed.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dynamics::EigenSystem;
use crate::error::{Error, Result};
use crate::network::HamiltonianMatrix;
use crate::sinc::{sinc, WindowKernel};

/// Real symmetric structure `S_mu` of a Hamiltonian perturbation.
#[derive(Debug, Clone, PartialEq)]
pub enum PerturbationStructure {
    /// `|mu><mu|`
    Bias(usize),
    /// `|k><l| + |l><k|`
    Coupling(usize, usize),
    /// Any real symmetric matrix.
    Matrix(DMatrix<f64>),
}

impl PerturbationStructure {
    pub fn matrix(&self, dim: usize) -> DMatrix<f64> {
        match self {
            PerturbationStructure::Bias(mu) => {
                let mut s = DMatrix::zeros(dim, dim);
                s[(*mu, *mu)] = 1.0;
                s
            }
            PerturbationStructure::Coupling(k, l) => {
                let mut s = DMatrix::zeros(dim, dim);
                s[(*k, *l)] += 1.0;
                s[(*l, *k)] += 1.0;
                s
            }
            PerturbationStructure::Matrix(s) => s.clone(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            PerturbationStructure::Bias(mu) => format!("bias({mu})"),
            PerturbationStructure::Coupling(k, l) => format!("coupling({k},{l})"),
            PerturbationStructure::Matrix(_) => "matrix".to_string(),
        }
    }
}

/// Objective whose derivatives are taken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Readout {
    /// `p(n <- m, T)`
    Instant { t: f64 },
    /// `p̄(n <- m, T; delta T)`
    Window { t: f64, half_width: f64 },
}

impl Readout {
    pub fn new(t: f64, window: Option<f64>) -> Result<Self> {
        match window {
            None => Ok(Readout::Instant { t }),
            Some(w) if w > 0.0 => Ok(Readout::Window { t, half_width: w }),
            Some(w) => Err(Error::Domain(format!(
                "readout half-width must be positive, got {w}"
            ))),
        }
    }

    pub fn time(&self) -> f64 {
        match *self {
            Readout::Instant { t } | Readout::Window { t, .. } => t,
        }
    }

    pub fn value(&self, eig: &EigenSystem, m: usize, n: usize) -> f64 {
        match *self {
            Readout::Instant { t } => eig.fidelity(m, n, t),
            Readout::Window { t, half_width } => eig
                .avg_fidelity(m, n, t, half_width)
                .expect("half-width validated at construction"),
        }
    }
}

/// Derivative of an objective with respect to every entry of `H_D`.
#[derive(Debug, Clone)]
pub struct SensitivityKernel {
    g: DMatrix<f64>,
}

impl SensitivityKernel {
    pub fn new(eig: &EigenSystem, m: usize, n: usize, readout: Readout) -> Self {
        let k = match readout {
            Readout::Instant { t } => instant_eigen_kernel(eig, m, n, t),
            Readout::Window { t, half_width } => window_eigen_kernel(eig, m, n, t, half_width),
        };
        let v = eig.vectors();
        Self {
            g: v * k * v.transpose(),
        }
    }

    /// `dp/d delta` along `S`.
    pub fn sensitivity(&self, s: &PerturbationStructure) -> f64 {
        match s {
            PerturbationStructure::Bias(mu) => self.g[(*mu, *mu)],
            PerturbationStructure::Coupling(k, l) if k == l => 2.0 * self.g[(*k, *k)],
            PerturbationStructure::Coupling(k, l) => self.g[(*k, *l)] + self.g[(*l, *k)],
            PerturbationStructure::Matrix(s) => s.component_mul(&self.g).sum(),
        }
    }

    /// Gradient with respect to the biases `D_mu`.
    pub fn bias_gradient(&self) -> Vec<f64> {
        (0..self.g.nrows()).map(|mu| self.g[(mu, mu)]).collect()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }
}

fn instant_eigen_kernel(eig: &EigenSystem, m: usize, n: usize, t: f64) -> DMatrix<f64> {
    let dim = eig.dim();
    let v = eig.vectors();
    let lambda = eig.eigenvalues();
    let c = eig.overlaps(m, n);
    let (a, b) = c.iter().zip(lambda).fold((0.0, 0.0), |(a, b), (&cj, &lj)| {
        let (s, co) = (t * lj).sin_cos();
        (a + cj * co, b + cj * s)
    });
    DMatrix::from_fn(dim, dim, |k, l| {
        let xy = v[(n, k)] * v[(m, l)];
        if xy == 0.0 {
            return 0.0;
        }
        let mean = 0.5 * (lambda[k] + lambda[l]);
        let (s, co) = (t * mean).sin_cos();
        -2.0 * t * xy * sinc(0.5 * t * (lambda[k] - lambda[l])) * (s * a - co * b)
    })
}

fn window_eigen_kernel(
    eig: &EigenSystem,
    m: usize,
    n: usize,
    t: f64,
    half_width: f64,
) -> DMatrix<f64> {
    let dim = eig.dim();
    let v = eig.vectors();
    let lambda = eig.eigenvalues();
    let c = eig.overlaps(m, n);
    let kernel = WindowKernel {
        center: t,
        half: half_width,
    };
    DMatrix::from_fn(dim, dim, |k, l| {
        let xy = v[(n, k)] * v[(m, l)];
        if xy == 0.0 {
            return 0.0;
        }
        let q: f64 = c
            .iter()
            .zip(lambda)
            .filter(|(&cj, _)| cj != 0.0)
            .map(|(&cj, &lj)| cj * kernel.divided_difference(lambda[k] - lj, lambda[l] - lj))
            .sum();
        2.0 * xy * q
    })
}

/// `dp/dD_k` for instantaneous readout at time `t`.
pub fn grad_fidelity_bias(eig: &EigenSystem, m: usize, n: usize, t: f64) -> Vec<f64> {
    SensitivityKernel::new(eig, m, n, Readout::Instant { t }).bias_gradient()
}

/// `dp/dT = 2 Im(conj(a) sum_k lambda_k c_k exp(-i T lambda_k))`.
pub fn grad_fidelity_time(eig: &EigenSystem, m: usize, n: usize, t: f64) -> f64 {
    let c = eig.overlaps(m, n);
    let (a, da) = c.iter().zip(eig.eigenvalues()).fold(
        (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
        |(a, da), (&ck, &lk)| {
            let term = Complex64::from_polar(ck, -t * lk);
            (a + term, da + term * lk)
        },
    );
    2.0 * (a.conj() * da).im
}

/// Gradient of the window-averaged fidelity over biases and centre time.
pub fn grad_avg_fidelity(
    eig: &EigenSystem,
    m: usize,
    n: usize,
    t: f64,
    half_width: f64,
) -> Result<(Vec<f64>, f64)> {
    let readout = Readout::new(t, Some(half_width))?;
    let d_bias = SensitivityKernel::new(eig, m, n, readout).bias_gradient();
    Ok((
        d_bias,
        avg_fidelity_time_derivative(eig, m, n, t, half_width),
    ))
}

fn avg_fidelity_time_derivative(
    eig: &EigenSystem,
    m: usize,
    n: usize,
    t: f64,
    half_width: f64,
) -> f64 {
    let c = eig.overlaps(m, n);
    let lambda = eig.eigenvalues();
    let mut total = 0.0;
    for k in 0..c.len() {
        for l in k + 1..c.len() {
            let w = lambda[k] - lambda[l];
            total -= 2.0 * c[k] * c[l] * w * (w * t).sin() * sinc(w * half_width);
        }
    }
    total
}

/// Derivative of the objective with respect to `T` for either readout.
pub fn grad_time(eig: &EigenSystem, m: usize, n: usize, readout: Readout) -> f64 {
    match readout {
        Readout::Instant { t } => grad_fidelity_time(eig, m, n, t),
        Readout::Window { t, half_width } => avg_fidelity_time_derivative(eig, m, n, t, half_width),
    }
}

/// `dp(n <- m, T)/d delta` at `delta = 0` for `H + delta S`.
pub fn sensitivity(
    eig: &EigenSystem,
    m: usize,
    n: usize,
    t: f64,
    s: &PerturbationStructure,
) -> f64 {
    SensitivityKernel::new(eig, m, n, Readout::Instant { t }).sensitivity(s)
}

/// Central finite difference of the objective under `H + delta S`,
/// re-diagonalizing the perturbed Hamiltonian at `delta = +-step`.
pub fn finite_difference_sensitivity(
    h: &HamiltonianMatrix,
    m: usize,
    n: usize,
    readout: Readout,
    s: &PerturbationStructure,
    step: f64,
) -> Result<f64> {
    let s = s.matrix(h.dim());
    let eval = |delta: f64| -> Result<f64> {
        let eig = EigenSystem::new(&h.perturbed(&s, delta), None)?;
        Ok(readout.value(&eig, m, n))
    };
    Ok((eval(step)? - eval(-step)?) / (2.0 * step))
}
