//! Design and verification of static bias controllers ("energy landscapes")
//! for excitation transfer and localization in single-excitation XX spin
//! rings and chains.
//!
//! The crate is organised bottom-up:
//!
//! * [`network`] builds `H_D = H_S + diag(D)` and the reflection orbits used
//!   to parametrize symmetric landscapes.
//! * [`dynamics`] diagonalizes `H_D` once and evaluates amplitudes,
//!   instantaneous and window-averaged fidelities, and tracking errors.
//! * [`gradients`] gives exact derivatives with respect to biases, time and
//!   arbitrary symmetric perturbations.
//! * [`optimizer`] runs seeded multistart L-BFGS searches.
//! * [`analysis`] checks eigenstructure conditions and sensitivities of
//!   designed controllers.
//! * [`record`] and [`export`] persist experiments and emit plot-ready CSV.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod export;
pub mod gradients;
pub mod network;
pub mod optimizer;
pub mod record;
mod sinc;

pub use dynamics::{EigenGroup, EigenSystem, TimeSpec, TransferTask};
pub use error::{Error, Result};
pub use gradients::{PerturbationStructure, Readout, SensitivityKernel};
pub use network::{
    expand_symmetric_bias, BiasVector, HamiltonianMatrix, NetworkDescriptor, SpinNetwork,
    SymmetryOrbits, Topology,
};
pub use optimizer::{Controller, ControllerSet, ObjectiveKind, OptimizationConfig};
