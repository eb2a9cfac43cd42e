//! Diagnostics for designed controllers: superoptimality conditions,
//! zero-sum of the transfer projections, signature symmetry of the
//! eigenvectors, speed limits, coupling sensitivities and the rank
//! concordance between infidelity and sensitivity.

use std::f64::consts::{PI, SQRT_2, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::EigenSystem;
use crate::error::{Error, Result};
use crate::gradients::{
    finite_difference_sensitivity, PerturbationStructure, Readout, SensitivityKernel,
};
use crate::network::{BiasVector, SpinNetwork, SymmetryOrbits};
use crate::optimizer::{Controller, ControllerSet};

/// `|<n|Pi_k|m>|` below this is a dark eigenspace.
pub const DARK_TOL: f64 = 1e-10;

/// Default tolerance for flagging a controller superoptimal.
pub const SUPEROPTIMAL_EPS: f64 = 1e-6;

/// Smallest relative eigenvalue gap for which eigenvectors are resolved well
/// enough to test the signature property. Computed eigenvectors carry errors
/// of order `eps |H| / gap`, about `1e-15 / gap` here, so this keeps them
/// below `1e-11`.
pub const SIGNATURE_GAP_RTOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperoptimalityReport {
    /// `sum_k |<n|Pi_k|m>|`
    pub projection_sum: f64,
    /// `1 - projection_sum`
    pub projection_residual: f64,
    /// Distance of `T lambda_k - phi` from the even (positive projection) or
    /// odd (negative projection) multiple of `pi`, per eigenspace; dark
    /// eigenspaces report 0.
    pub phase_residuals: Vec<f64>,
    pub max_phase_residual: f64,
    pub dark_states: Vec<usize>,
    pub global_phase: f64,
    pub superoptimal: bool,
}

impl SuperoptimalityReport {
    pub fn total_residual(&self) -> f64 {
        self.projection_residual.abs() + self.max_phase_residual
    }
}

pub fn check_superoptimality(
    eig: &EigenSystem,
    m: usize,
    n: usize,
    t: f64,
    eps: f64,
) -> SuperoptimalityReport {
    let projections = eig.projections(m, n);
    let projection_sum: f64 = projections.iter().map(|c| c.abs()).sum();
    let phi = eig.optimal_phase(m, n, t);
    let mut dark_states = Vec::new();
    let phase_residuals: Vec<f64> = projections
        .iter()
        .zip(eig.groups())
        .enumerate()
        .map(|(k, (&c, group))| {
            if c.abs() < DARK_TOL {
                dark_states.push(k);
                return 0.0;
            }
            let target = if c > 0.0 { 0.0 } else { PI };
            let r = (t * group.value - phi - target).rem_euclid(TAU);
            r.min(TAU - r)
        })
        .collect();
    let max_phase_residual = phase_residuals.iter().copied().fold(0.0, f64::max);
    let projection_residual = 1.0 - projection_sum;
    SuperoptimalityReport {
        projection_sum,
        projection_residual,
        superoptimal: projection_residual.abs() < eps && max_phase_residual < eps,
        phase_residuals,
        max_phase_residual,
        dark_states,
        global_phase: phi,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroSumReport {
    /// `|sum_k <n|Pi_k|m>|`
    pub residual: f64,
    /// Non-dark projections take both signs.
    pub both_signs: bool,
}

pub fn check_zero_sum(eig: &EigenSystem, m: usize, n: usize) -> Result<ZeroSumReport> {
    if m == n {
        return Err(Error::Domain(
            "zero-sum check needs distinct input and output nodes".into(),
        ));
    }
    let projections = eig.projections(m, n);
    let residual = projections.iter().sum::<f64>().abs();
    let bright = projections.iter().filter(|c| c.abs() >= DARK_TOL);
    let (mut pos, mut neg) = (false, false);
    for c in bright {
        pos |= *c > 0.0;
        neg |= *c < 0.0;
    }
    Ok(ZeroSumReport {
        residual,
        both_signs: pos && neg,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum SignatureReport {
    Checked {
        /// `max_{k,l} |(v_k)_{m+l} - s_k (v_k)_{n-l}|`
        max_violation: f64,
        /// `max |(v_k)_p|` over reflection fixed points `p` and eigenvectors
        /// with `s_k = -1`; `None` when the reflection has no fixed point.
        fixed_point_max: Option<f64>,
        signs: Vec<i8>,
    },
    /// The eigenvalues are not resolvably distinct.
    Inconclusive { min_gap: f64 },
}

impl SignatureReport {
    pub fn max_violation(&self) -> Option<f64> {
        match self {
            SignatureReport::Checked { max_violation, .. } => Some(*max_violation),
            SignatureReport::Inconclusive { .. } => None,
        }
    }
}

/// Tests `(v_k)_{m+l} = s_k (v_k)_{n-l}` for a bias that is symmetric under
/// the reflection exchanging `m` and `n`.
pub fn check_signature(
    net: &SpinNetwork,
    eig: &EigenSystem,
    m: usize,
    n: usize,
    bias: &BiasVector,
) -> Result<SignatureReport> {
    let orbits = SymmetryOrbits::for_task(net, m, n)?;
    let scale = bias
        .as_slice()
        .iter()
        .fold(1.0f64, |acc, d| acc.max(d.abs()));
    let asymmetry = orbits.asymmetry(bias);
    if asymmetry > 1e-12 * scale {
        return Err(Error::Precondition(format!(
            "bias is not reflection symmetric (max asymmetry {asymmetry:.3e})"
        )));
    }
    let lambda = eig.eigenvalues();
    let radius = lambda.iter().fold(1.0f64, |acc, l| acc.max(l.abs()));
    let min_gap = lambda
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    if min_gap < SIGNATURE_GAP_RTOL * radius {
        return Ok(SignatureReport::Inconclusive { min_gap });
    }

    let v = eig.vectors();
    let dim = eig.dim();
    let fixed = orbits.fixed_points();
    let mut max_violation = 0.0f64;
    let mut fixed_point_max: Option<f64> = None;
    let mut signs = Vec::with_capacity(dim);
    for k in 0..dim {
        let overlap = v[(n, k)] * v[(m, k)];
        let s = if overlap.abs() >= DARK_TOL {
            overlap.signum()
        } else {
            // Dark at m and n: read the parity from the whole vector.
            let parity: f64 = (0..dim)
                .map(|i| v[(i, k)] * v[(orbits.reflect(i), k)])
                .sum();
            parity.signum()
        };
        signs.push(s as i8);
        for i in 0..dim {
            max_violation = max_violation.max((v[(i, k)] - s * v[(orbits.reflect(i), k)]).abs());
        }
        if s < 0.0 {
            for &p in &fixed {
                let cur = fixed_point_max.unwrap_or(0.0);
                fixed_point_max = Some(cur.max(v[(p, k)].abs()));
            }
        }
    }
    if fixed_point_max.is_none() && !fixed.is_empty() {
        fixed_point_max = Some(0.0);
    }
    Ok(SignatureReport::Checked {
        max_violation,
        fixed_point_max,
        signs,
    })
}

/// Minimal transfer time across `distance` edges where a closed form is
/// known: `pi/2` (two-spin Rabi) and `pi/sqrt 2` (quenched three-chain).
pub fn speed_limit(distance: usize) -> Option<f64> {
    match distance {
        1 => Some(PI / 2.0),
        2 => Some(PI / SQRT_2),
        _ => None,
    }
}

/// Controllers at distance 1 or 2 with fidelity `>= threshold` that beat
/// the speed limit by more than `slack`.
pub fn speed_limit_violations<'a>(
    set: &'a ControllerSet,
    net: &SpinNetwork,
    m: usize,
    n: usize,
    threshold: f64,
    slack: f64,
) -> Vec<&'a Controller> {
    let Some(limit) = speed_limit(net.distance(m, n)) else {
        return Vec::new();
    };
    set.iter()
        .filter(|c| c.fidelity >= threshold && c.time < limit - slack)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    /// `(structure label, dp/d delta)` for every coupled pair.
    pub per_structure: Vec<(String, f64)>,
    pub norm: f64,
    /// Largest `|analytic - finite difference|`.
    pub fd_residual: f64,
}

/// Coupling sensitivities of the controller `(bias, readout)` for transfer
/// `m -> n`, cross-checked against finite differences.
pub fn sensitivity_norm(
    net: &SpinNetwork,
    bias: &BiasVector,
    readout: Readout,
    m: usize,
    n: usize,
) -> Result<SensitivityReport> {
    let h = net.hamiltonian(bias)?;
    let eig = EigenSystem::new(&h, None)?;
    let kernel = SensitivityKernel::new(&eig, m, n, readout);
    let reach = match readout {
        Readout::Instant { t } => t.abs(),
        Readout::Window { t, half_width } => t.abs() + half_width,
    };
    let step = 1e-6 / reach.max(1.0);
    let mut per_structure = Vec::new();
    let mut fd_residual = 0.0f64;
    for (k, l) in net.edges() {
        let s = PerturbationStructure::Coupling(k, l);
        let analytic = kernel.sensitivity(&s);
        let fd = finite_difference_sensitivity(&h, m, n, readout, &s, step)?;
        fd_residual = fd_residual.max((analytic - fd).abs());
        per_structure.push((s.label(), analytic));
    }
    let norm = per_structure.iter().map(|(_, d)| d * d).sum::<f64>().sqrt();
    Ok(SensitivityReport {
        per_structure,
        norm,
        fd_residual,
    })
}

/// Norm of the coupling-sensitivity vector (no finite-difference check).
pub fn coupling_sensitivity_norm(
    net: &SpinNetwork,
    controller: &Controller,
    m: usize,
    n: usize,
) -> Result<f64> {
    let eig = EigenSystem::from_network(net, &controller.bias)?;
    let kernel = SensitivityKernel::new(&eig, m, n, controller.readout());
    Ok(net
        .edges()
        .into_iter()
        .map(|(k, l)| {
            kernel
                .sensitivity(&PerturbationStructure::Coupling(k, l))
                .powi(2)
        })
        .sum::<f64>()
        .sqrt())
}

/// Fills `sensitivity_norm` for every controller in the set.
pub fn annotate_sensitivities(
    set: &mut ControllerSet,
    net: &SpinNetwork,
    m: usize,
    n: usize,
) -> Result<()> {
    let norms: Vec<Result<f64>> = set
        .controllers()
        .par_iter()
        .map(|c| coupling_sensitivity_norm(net, c, m, n))
        .collect();
    for (c, norm) in set.controllers_mut().iter_mut().zip(norms) {
        c.sensitivity_norm = Some(norm?);
    }
    Ok(())
}

/// Largest `|dp/d delta|` over every elementary symmetric structure (all
/// biases and all pairs). Any real symmetric perturbation is a combination
/// of these.
pub fn max_symmetric_sensitivity(eig: &EigenSystem, m: usize, n: usize, readout: Readout) -> f64 {
    let kernel = SensitivityKernel::new(eig, m, n, readout);
    let dim = eig.dim();
    let mut worst = 0.0f64;
    for k in 0..dim {
        worst = worst.max(kernel.sensitivity(&PerturbationStructure::Bias(k)).abs());
        for l in k + 1..dim {
            worst = worst.max(
                kernel
                    .sensitivity(&PerturbationStructure::Coupling(k, l))
                    .abs(),
            );
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcordanceReport {
    /// Controllers that passed the fidelity filter.
    pub n_used: usize,
    /// Kendall tau-b between infidelity and sensitivity norm.
    pub tau: f64,
    /// Tau is undefined because one of the rankings is entirely tied.
    pub degenerate_ties: bool,
    /// Median sensitivity norm of the best tenth by fidelity.
    pub top_decile_median: f64,
    /// Median sensitivity norm of the worst tenth by fidelity.
    pub bottom_decile_median: f64,
}

/// Fidelity filter applied before ranking.
pub const CONCORDANCE_MIN_FIDELITY: f64 = 0.1;
pub const CONCORDANCE_MIN_CONTROLLERS: usize = 10;

pub fn concordance(set: &ControllerSet) -> Result<ConcordanceReport> {
    let mut pairs: Vec<(f64, f64)> = set
        .iter()
        .filter(|c| c.fidelity > CONCORDANCE_MIN_FIDELITY)
        .filter_map(|c| c.sensitivity_norm.map(|s| (c.infidelity, s)))
        .collect();
    if pairs.len() < CONCORDANCE_MIN_CONTROLLERS {
        return Err(Error::InsufficientData {
            needed: CONCORDANCE_MIN_CONTROLLERS,
            have: pairs.len(),
        });
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let infidelity: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let sensitivity: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (tau, degenerate_ties) = match kendall_tau_b(&infidelity, &sensitivity) {
        Some(tau) => (tau, false),
        None => (0.0, true),
    };
    let decile = (pairs.len() / 10).max(1);
    Ok(ConcordanceReport {
        n_used: pairs.len(),
        tau,
        degenerate_ties,
        top_decile_median: median(&sensitivity[..decile]),
        bottom_decile_median: median(&sensitivity[pairs.len() - decile..]),
    })
}

/// Kendall tau-b; `None` when either variable is constant.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len().min(y.len());
    let (mut concordant, mut discordant) = (0i64, 0i64);
    let (mut tied_x, mut tied_y) = (0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = (x[i] - x[j])
                .partial_cmp(&0.0)
                .unwrap_or(std::cmp::Ordering::Equal);
            let dy = (y[i] - y[j])
                .partial_cmp(&0.0)
                .unwrap_or(std::cmp::Ordering::Equal);
            use std::cmp::Ordering::Equal;
            match (dx, dy) {
                (Equal, Equal) => {
                    tied_x += 1;
                    tied_y += 1;
                }
                (Equal, _) => tied_x += 1,
                (_, Equal) => tied_y += 1,
                (a, b) if a == b => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let pairs = (n as i64) * (n as i64 - 1) / 2;
    let denom = (((pairs - tied_x) as f64) * ((pairs - tied_y) as f64)).sqrt();
    if denom == 0.0 {
        None
    } else {
        Some((concordant - discordant) as f64 / denom)
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len().is_multiple_of(2) {
        0.5 * (v[mid - 1] + v[mid])
    } else {
        v[mid]
    }
}

/// All diagnostics for one controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerReport {
    pub controller_index: usize,
    pub superoptimality: SuperoptimalityReport,
    /// Absent for self-transfer.
    pub zero_sum: Option<ZeroSumReport>,
    /// Absent when the bias is not reflection symmetric.
    pub signature: Option<SignatureReport>,
    pub sensitivity: SensitivityReport,
}

pub fn report_controller(
    net: &SpinNetwork,
    m: usize,
    n: usize,
    controller: &Controller,
    controller_index: usize,
    eps: f64,
) -> Result<ControllerReport> {
    let mut report = report_bias(net, m, n, &controller.bias, controller.readout(), eps)?;
    report.controller_index = controller_index;
    Ok(report)
}

/// Diagnostics for an arbitrary bias and readout. Superoptimality is checked
/// at the readout time (the window center for averaged readouts).
pub fn report_bias(
    net: &SpinNetwork,
    m: usize,
    n: usize,
    bias: &BiasVector,
    readout: Readout,
    eps: f64,
) -> Result<ControllerReport> {
    let eig = EigenSystem::from_network(net, bias)?;
    let zero_sum = if m == n {
        None
    } else {
        Some(check_zero_sum(&eig, m, n)?)
    };
    let signature = match check_signature(net, &eig, m, n, bias) {
        Ok(report) => Some(report),
        Err(Error::Precondition(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(ControllerReport {
        controller_index: 0,
        superoptimality: check_superoptimality(&eig, m, n, readout.time(), eps),
        zero_sum,
        signature,
        sensitivity: sensitivity_norm(net, bias, readout, m, n)?,
    })
}
