//! Single-excitation XX spin networks and bias (energy-landscape) controls.
//!
//! Nodes are 0-based throughout the library; ring indices are taken modulo N.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Ring,
    Chain,
}

impl std::fmt::Display for Topology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Topology::Ring => f.write_str("ring"),
            Topology::Chain => f.write_str("chain"),
        }
    }
}

impl std::str::FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ring" => Ok(Topology::Ring),
            "chain" => Ok(Topology::Chain),
            other => Err(Error::Domain(format!("unknown topology '{other}'"))),
        }
    }
}

/// Serialized form of a network: uniform couplings are implied by the topology.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkDescriptor {
    pub n_spins: usize,
    pub topology: Topology,
    pub kappa: f64,
}

/// A ring or chain of spins with symmetric couplings `J[k][l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinNetwork {
    n_spins: usize,
    topology: Topology,
    couplings: DMatrix<f64>,
    kappa: f64,
}

impl SpinNetwork {
    /// Uniform nearest-neighbour network with `J = 1` (units `hbar = J = 1`).
    pub fn new(n_spins: usize, topology: Topology, kappa: f64) -> Result<Self> {
        if n_spins < 2 {
            return Err(Error::InvalidSize(n_spins));
        }
        let mut couplings = DMatrix::zeros(n_spins, n_spins);
        for k in 0..n_spins - 1 {
            couplings[(k, k + 1)] = 1.0;
            couplings[(k + 1, k)] = 1.0;
        }
        // A 2-ring would double-count its only edge.
        if topology == Topology::Ring && n_spins > 2 {
            couplings[(n_spins - 1, 0)] = 1.0;
            couplings[(0, n_spins - 1)] = 1.0;
        }
        Ok(Self {
            n_spins,
            topology,
            couplings,
            kappa,
        })
    }

    /// Network with caller-supplied couplings. The matrix must be square,
    /// symmetric, non-negative, with zero diagonal.
    pub fn with_couplings(topology: Topology, couplings: DMatrix<f64>, kappa: f64) -> Result<Self> {
        let n_spins = couplings.nrows();
        if n_spins < 2 {
            return Err(Error::InvalidSize(n_spins));
        }
        if couplings.ncols() != n_spins {
            return Err(Error::Dimension {
                expected: n_spins,
                actual: couplings.ncols(),
            });
        }
        for k in 0..n_spins {
            if couplings[(k, k)] != 0.0 {
                return Err(Error::Domain(format!("self-coupling at node {k}")));
            }
            for l in 0..n_spins {
                let j = couplings[(k, l)];
                if !(j.is_finite() && j >= 0.0) || j != couplings[(l, k)] {
                    return Err(Error::Domain(format!(
                        "couplings must be finite, non-negative and symmetric (entry {k},{l})"
                    )));
                }
            }
        }
        Ok(Self {
            n_spins,
            topology,
            couplings,
            kappa,
        })
    }

    pub fn from_descriptor(d: &NetworkDescriptor) -> Result<Self> {
        Self::new(d.n_spins, d.topology, d.kappa)
    }

    pub fn descriptor(&self) -> NetworkDescriptor {
        NetworkDescriptor {
            n_spins: self.n_spins,
            topology: self.topology,
            kappa: self.kappa,
        }
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn couplings(&self) -> &DMatrix<f64> {
        &self.couplings
    }

    pub fn coupling(&self, k: usize, l: usize) -> f64 {
        self.couplings[(k, l)]
    }

    /// Coupled pairs `(k, l)` with `k < l`, in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for k in 0..self.n_spins {
            for l in k + 1..self.n_spins {
                if self.couplings[(k, l)] != 0.0 {
                    edges.push((k, l));
                }
            }
        }
        edges
    }

    /// Diagonal contribution `J_k` of the `Z_k Z_l` interaction restricted to
    /// the single-excitation subspace: flipping spin `k` turns the sign of
    /// every ordered pair that contains it.
    pub fn zz_diagonal(&self, k: usize) -> f64 {
        let total: f64 = self.couplings.iter().sum();
        let row: f64 = self.couplings.row(k).iter().sum();
        total - 4.0 * row
    }

    /// Shortest graph distance between two nodes.
    pub fn distance(&self, m: usize, n: usize) -> usize {
        let d = m.abs_diff(n);
        match self.topology {
            Topology::Ring => d.min(self.n_spins - d),
            Topology::Chain => d,
        }
    }

    pub fn check_node(&self, node: usize) -> Result<()> {
        if node >= self.n_spins {
            Err(Error::NodeOutOfRange {
                node,
                n_spins: self.n_spins,
            })
        } else {
            Ok(())
        }
    }

    /// `H_D = H_S + diag(D)`, with diagonal `D_k + kappa * J_k`.
    pub fn hamiltonian(&self, bias: &BiasVector) -> Result<HamiltonianMatrix> {
        if bias.len() != self.n_spins {
            return Err(Error::Dimension {
                expected: self.n_spins,
                actual: bias.len(),
            });
        }
        let mut h = self.couplings.clone();
        for k in 0..self.n_spins {
            let shift = if self.kappa != 0.0 {
                self.kappa * self.zz_diagonal(k)
            } else {
                0.0
            };
            h[(k, k)] = bias[k] + shift;
        }
        Ok(HamiltonianMatrix { h })
    }
}

/// Static on-site potentials `D_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BiasVector(Vec<f64>);

impl BiasVector {
    pub fn new(d: Vec<f64>) -> Result<Self> {
        if let Some(k) = d.iter().position(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("bias entry {k} is not finite")));
        }
        Ok(Self(d))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn within_bound(&self, d_max: f64) -> bool {
        self.0.iter().all(|d| d.abs() <= d_max)
    }

    /// Adds the same constant to every site.
    pub fn shifted(&self, c: f64) -> Self {
        Self(self.0.iter().map(|d| d + c).collect())
    }
}

impl std::ops::Index<usize> for BiasVector {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

/// Real symmetric single-excitation Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    h: DMatrix<f64>,
}

impl HamiltonianMatrix {
    /// Wraps an arbitrary real matrix after checking exact symmetry.
    pub fn from_matrix(h: DMatrix<f64>) -> Result<Self> {
        if h.nrows() != h.ncols() {
            return Err(Error::Dimension {
                expected: h.nrows(),
                actual: h.ncols(),
            });
        }
        if h != h.transpose() {
            return Err(Error::Domain("Hamiltonian is not symmetric".into()));
        }
        Ok(Self { h })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    /// `H + delta * S` for a symmetric structure `S`.
    pub fn perturbed(&self, s: &DMatrix<f64>, delta: f64) -> Self {
        let mut h = &self.h + s * delta;
        // Enforce bitwise symmetry after the floating-point update.
        for k in 0..h.nrows() {
            for l in k + 1..h.ncols() {
                h[(l, k)] = h[(k, l)];
            }
        }
        Self { h }
    }
}

/// Orbits of the reflection `sigma(m + j) = n - j` that maps input onto output.
///
/// Biases constant on each orbit commute with the reflection, which is what
/// makes the eigenvectors signature symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryOrbits {
    n_spins: usize,
    reflection: Vec<usize>,
    orbits: Vec<Vec<usize>>,
    orbit_of: Vec<usize>,
}

impl SymmetryOrbits {
    /// Reflection on a ring, indices modulo N.
    pub fn ring(n_spins: usize, m: usize, n: usize) -> Result<Self> {
        if n_spins < 2 {
            return Err(Error::InvalidSize(n_spins));
        }
        for node in [m, n] {
            if node >= n_spins {
                return Err(Error::NodeOutOfRange { node, n_spins });
            }
        }
        let reflection = (0..n_spins)
            .map(|i| (m + n + n_spins - i) % n_spins)
            .collect();
        Ok(Self::from_reflection(n_spins, m, reflection))
    }

    /// Reflection appropriate to the network topology. Chains only admit the
    /// mirror `i -> N-1-i`, so `m + n` must equal `N - 1`.
    pub fn for_task(net: &SpinNetwork, m: usize, n: usize) -> Result<Self> {
        net.check_node(m)?;
        net.check_node(n)?;
        let size = net.n_spins();
        match net.topology() {
            Topology::Ring => Self::ring(size, m, n),
            Topology::Chain => {
                if m + n != size - 1 {
                    return Err(Error::Precondition(format!(
                        "chain has no mirror symmetry mapping node {m} to node {n}"
                    )));
                }
                let reflection = (0..size).map(|i| size - 1 - i).collect();
                Ok(Self::from_reflection(size, m, reflection))
            }
        }
    }

    fn from_reflection(n_spins: usize, m: usize, reflection: Vec<usize>) -> Self {
        let mut orbit_of = vec![usize::MAX; n_spins];
        let mut orbits: Vec<Vec<usize>> = Vec::new();
        // Label orbits by walking away from the input node.
        for j in 0..n_spins {
            let i = (m + j) % n_spins;
            if orbit_of[i] != usize::MAX {
                continue;
            }
            let partner = reflection[i];
            let idx = orbits.len();
            orbit_of[i] = idx;
            orbit_of[partner] = idx;
            if partner == i {
                orbits.push(vec![i]);
            } else {
                orbits.push(vec![i, partner]);
            }
        }
        Self {
            n_spins,
            reflection,
            orbits,
            orbit_of,
        }
    }

    /// Number of free parameters.
    pub fn len(&self) -> usize {
        self.orbits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orbits.is_empty()
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn orbits(&self) -> &[Vec<usize>] {
        &self.orbits
    }

    pub fn orbit_of(&self, node: usize) -> usize {
        self.orbit_of[node]
    }

    pub fn reflect(&self, node: usize) -> usize {
        self.reflection[node]
    }

    /// Nodes mapped onto themselves by the reflection.
    pub fn fixed_points(&self) -> Vec<usize> {
        (0..self.n_spins)
            .filter(|&i| self.reflection[i] == i)
            .collect()
    }

    pub fn expand(&self, half: &[f64]) -> Result<BiasVector> {
        if half.len() != self.orbits.len() {
            return Err(Error::Dimension {
                expected: self.orbits.len(),
                actual: half.len(),
            });
        }
        BiasVector::new(self.orbit_of.iter().map(|&o| half[o]).collect())
    }

    /// Chain rule from full-bias gradient to orbit coordinates.
    pub fn reduce_gradient(&self, full: &[f64]) -> Vec<f64> {
        self.orbits
            .iter()
            .map(|orbit| orbit.iter().map(|&i| full[i]).sum())
            .collect()
    }

    /// Orbit averages of a full bias vector (exact for symmetric inputs).
    pub fn project(&self, bias: &BiasVector) -> Vec<f64> {
        self.orbits
            .iter()
            .map(|orbit| orbit.iter().map(|&i| bias[i]).sum::<f64>() / orbit.len() as f64)
            .collect()
    }

    /// Largest `|D_i - D_sigma(i)|`.
    pub fn asymmetry(&self, bias: &BiasVector) -> f64 {
        (0..self.n_spins)
            .map(|i| (bias[i] - bias[self.reflection[i]]).abs())
            .fold(0.0, f64::max)
    }
}

/// Ring bias vector satisfying `D[(m + l) mod N] = D[(n - l) mod N]`, built
/// from one value per reflection orbit.
pub fn expand_symmetric_bias(
    half: &[f64],
    m: usize,
    n: usize,
    n_spins: usize,
) -> Result<BiasVector> {
    SymmetryOrbits::ring(n_spins, m, n)?.expand(half)
}
