//! Seeded multistart quasi-Newton search for bias controllers.
//!
//! Each restart draws its own initial guess from a restart-indexed random
//! stream, runs L-BFGS on the infidelity `1 - p` (optionally jointly with
//! the transfer time), and yields a [`Controller`]. Restarts run in
//! parallel; results are collected in restart order and then sorted, so a
//! fixed seed reproduces the set exactly.

pub mod init;
pub mod lbfgs;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{EigenSystem, TimeSpec, TransferTask};
use crate::error::{Error, Result};
use crate::gradients::{grad_time, Readout, SensitivityKernel};
use crate::network::{BiasVector, SpinNetwork, SymmetryOrbits, Topology};

pub use init::{restart_rng, BiasInit, ChainPeakTable, InitialGuess};
pub use lbfgs::{Bounds, LbfgsSettings, Minimum, Termination};

use init::GuessGenerator;

/// Search settings shared by all restarts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationConfig {
    pub restarts: usize,
    /// Optimize over reflection orbits instead of the full bias vector.
    pub symmetry: bool,
    pub bias_init: BiasInit,
    /// Range of the log-uniform pattern amplitude.
    pub amplitude_range: (f64, f64),
    /// Chain peaks lower than this fraction of the highest are not used as
    /// start times.
    pub peak_rel_height: f64,
    pub seed: u64,
    pub grad_tol: f64,
    pub max_iter: usize,
    pub memory: usize,
    /// Optional box `|D_k| <= bias_bound`.
    pub bias_bound: Option<f64>,
    /// `None` picks 0.999 for instantaneous and 0.99 for windowed readout.
    pub fidelity_threshold: Option<f64>,
}

impl Default for OptimizationConfig {
    fn default() -> Self {
        Self {
            restarts: 100,
            symmetry: true,
            bias_init: BiasInit::Mixed,
            amplitude_range: (0.1, 100.0),
            peak_rel_height: 0.2,
            seed: 42,
            grad_tol: 1e-9,
            max_iter: 1000,
            memory: 10,
            bias_bound: None,
            fidelity_threshold: None,
        }
    }
}

impl OptimizationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::Domain("at least one restart is required".into()));
        }
        let (lo, hi) = self.amplitude_range;
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::Domain(format!(
                "invalid amplitude range [{lo}, {hi}]"
            )));
        }
        if let Some(b) = self.bias_bound {
            if !(b > 0.0) {
                return Err(Error::Domain(format!(
                    "bias bound must be positive, got {b}"
                )));
            }
        }
        Ok(())
    }

    pub fn threshold_for(&self, objective: ObjectiveKind) -> f64 {
        self.fidelity_threshold.unwrap_or(match objective {
            ObjectiveKind::Instantaneous => 0.999,
            _ => 0.99,
        })
    }

    fn lbfgs(&self) -> LbfgsSettings {
        LbfgsSettings {
            memory: self.memory,
            grad_tol: self.grad_tol,
            max_iter: self.max_iter,
            ..LbfgsSettings::default()
        }
    }
}

/// Which figure of merit a controller maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ObjectiveKind {
    /// `p(n <- m, T)`
    Instantaneous,
    /// `p̄(n <- m, T; half_width)`
    Windowed { half_width: f64 },
    /// `p̄(m <- m, hold/2; hold/2)`
    Localization { hold: f64 },
}

impl ObjectiveKind {
    /// Readout used to evaluate a controller with time `t`.
    pub fn readout(&self, t: f64) -> Readout {
        match *self {
            ObjectiveKind::Instantaneous => Readout::Instant { t },
            ObjectiveKind::Windowed { half_width } => Readout::Window { t, half_width },
            ObjectiveKind::Localization { hold } => Readout::Window {
                t: 0.5 * hold,
                half_width: 0.5 * hold,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub restart: usize,
    pub iterations: usize,
    pub converged: bool,
    /// The objective or its gradient became non-finite.
    pub failed: bool,
    pub termination: Termination,
    /// Norm of the (projected) gradient of the infidelity at the result.
    pub grad_norm: f64,
    pub initial_time: f64,
}

/// A designed bias landscape with its metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Controller {
    pub bias: BiasVector,
    /// Transfer time, or the holding time for localization.
    pub time: f64,
    pub objective: ObjectiveKind,
    pub fidelity: f64,
    pub infidelity: f64,
    pub sensitivity_norm: Option<f64>,
    pub provenance: Provenance,
}

impl Controller {
    pub fn readout(&self) -> Readout {
        self.objective.readout(self.time)
    }
}

/// Controllers sorted by increasing infidelity (ties by restart index).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ControllerSet {
    controllers: Vec<Controller>,
}

impl ControllerSet {
    pub fn new(mut controllers: Vec<Controller>) -> Self {
        controllers.sort_by(|a, b| {
            a.infidelity
                .total_cmp(&b.infidelity)
                .then(a.provenance.restart.cmp(&b.provenance.restart))
        });
        Self { controllers }
    }

    pub fn controllers(&self) -> &[Controller] {
        &self.controllers
    }

    pub fn controllers_mut(&mut self) -> &mut [Controller] {
        &mut self.controllers
    }

    pub fn best(&self) -> Option<&Controller> {
        self.controllers.first()
    }

    pub fn len(&self) -> usize {
        self.controllers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.controllers.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Controller> {
        self.controllers.iter()
    }

    pub fn into_vec(self) -> Vec<Controller> {
        self.controllers
    }
}

/// Shortest-time controller with fidelity at least `threshold`; ties in time
/// go to the lower infidelity.
pub fn fastest_above_threshold(set: &ControllerSet, threshold: f64) -> Option<&Controller> {
    set.iter()
        .filter(|c| c.fidelity >= threshold)
        .min_by(|a, b| {
            a.time
                .total_cmp(&b.time)
                .then(a.infidelity.total_cmp(&b.infidelity))
        })
}

/// A fully specified search problem.
struct Problem<'a> {
    net: &'a SpinNetwork,
    input: usize,
    output: usize,
    time: TimeSpec,
    objective: ObjectiveKind,
    orbits: Option<SymmetryOrbits>,
}

impl Problem<'_> {
    fn n_bias_params(&self) -> usize {
        self.orbits.as_ref().map_or(self.net.n_spins(), |o| o.len())
    }

    fn bias_from(&self, params: &[f64]) -> Result<BiasVector> {
        let bias_params = &params[..self.n_bias_params()];
        match &self.orbits {
            Some(o) => o.expand(bias_params),
            None => BiasVector::new(bias_params.to_vec()),
        }
    }

    fn time_from(&self, params: &[f64]) -> f64 {
        match self.time {
            TimeSpec::Fixed { t } => t,
            TimeSpec::Free { .. } => params[self.n_bias_params()],
        }
    }

    /// Infidelity and its gradient in optimizer coordinates.
    fn infidelity(&self, params: &[f64], grad: &mut [f64]) -> f64 {
        let Ok(bias) = self.bias_from(params) else {
            return f64::NAN;
        };
        let t = self.time_from(params);
        let Ok(eig) = EigenSystem::from_network(self.net, &bias) else {
            return f64::NAN;
        };
        let readout = self.objective.readout(t);
        let infidelity = match self.objective {
            ObjectiveKind::Instantaneous => eig.infidelity(self.input, self.output, t),
            _ => 1.0 - readout.value(&eig, self.input, self.output),
        };
        let full = SensitivityKernel::new(&eig, self.input, self.output, readout).bias_gradient();
        let k = self.n_bias_params();
        match &self.orbits {
            Some(o) => {
                for (g, r) in grad[..k].iter_mut().zip(o.reduce_gradient(&full)) {
                    *g = -r;
                }
            }
            None => {
                for (g, r) in grad[..k].iter_mut().zip(full) {
                    *g = -r;
                }
            }
        }
        if matches!(self.time, TimeSpec::Free { .. }) {
            grad[k] = -grad_time(&eig, self.input, self.output, readout);
        }
        infidelity
    }

    fn bounds(&self, config: &OptimizationConfig) -> Bounds {
        let k = self.n_bias_params();
        let mut bounds = Bounds::unbounded(k);
        if let Some(b) = config.bias_bound {
            bounds.lower.iter_mut().for_each(|x| *x = -b);
            bounds.upper.iter_mut().for_each(|x| *x = b);
        }
        if let TimeSpec::Free { lo, hi } = self.time {
            bounds.lower.push(lo);
            bounds.upper.push(hi);
        }
        bounds
    }

    fn generator(&self, config: &OptimizationConfig) -> GuessGenerator {
        let times = match self.time {
            TimeSpec::Fixed { t } => vec![t],
            TimeSpec::Free { lo, hi } => {
                let d = self.net.distance(self.input, self.output);
                let mut times: Vec<f64> = ChainPeakTable::new(d, hi, config.peak_rel_height)
                    .times()
                    .into_iter()
                    .filter(|&t| t >= lo)
                    .collect();
                if times.is_empty() {
                    times.push(0.5 * (lo + hi));
                }
                times
            }
        };
        GuessGenerator {
            n_spins: self.net.n_spins(),
            input: self.input,
            output: self.output,
            orbits: self.orbits.clone(),
            pattern: config.bias_init,
            amplitude: config.amplitude_range,
            times,
        }
    }

    fn run_restart(
        &self,
        config: &OptimizationConfig,
        generator: &GuessGenerator,
        restart: usize,
    ) -> Controller {
        let mut rng = restart_rng(config.seed, restart as u64);
        let guess = generator.guess(&mut rng);
        let mut x0 = guess.bias_params.clone();
        if let Some(b) = config.bias_bound {
            x0.iter_mut().for_each(|x| *x = x.clamp(-b, b));
        }
        if matches!(self.time, TimeSpec::Free { .. }) {
            x0.push(guess.time);
        }
        let bounds = self.bounds(config);
        let result = lbfgs::minimize(|x, g| self.infidelity(x, g), &x0, &bounds, &config.lbfgs());
        self.controller_from(config, restart, guess.time, &result, &x0)
    }

    fn controller_from(
        &self,
        config: &OptimizationConfig,
        restart: usize,
        initial_time: f64,
        result: &Minimum,
        x0: &[f64],
    ) -> Controller {
        let failed = result.termination == Termination::NonFinite;
        let params = if failed { x0 } else { &result.x[..] };
        let bias = self
            .bias_from(params)
            .unwrap_or_else(|_| BiasVector::zeros(self.net.n_spins()));
        let time = match self.objective {
            ObjectiveKind::Localization { hold } => hold,
            _ => self.time_from(params),
        };
        let infidelity = if failed || !result.value.is_finite() {
            1.0
        } else {
            result.value.clamp(0.0, 1.0)
        };
        Controller {
            bias,
            time,
            objective: self.objective,
            fidelity: 1.0 - infidelity,
            infidelity,
            sensitivity_norm: None,
            provenance: Provenance {
                seed: config.seed,
                restart,
                iterations: result.iterations,
                converged: result.converged(),
                failed,
                termination: result.termination,
                grad_norm: if result.grad_norm.is_finite() {
                    result.grad_norm
                } else {
                    f64::MAX
                },
                initial_time,
            },
        }
    }
}

fn orbits_for(
    net: &SpinNetwork,
    input: usize,
    output: usize,
    config: &OptimizationConfig,
) -> Result<Option<SymmetryOrbits>> {
    if !config.symmetry {
        return Ok(None);
    }
    match net.topology() {
        Topology::Ring => SymmetryOrbits::for_task(net, input, output).map(Some),
        // Chains only admit the mirror symmetry for mirror-image node pairs.
        Topology::Chain => Ok(SymmetryOrbits::for_task(net, input, output).ok()),
    }
}

fn objective_for(task: &TransferTask) -> ObjectiveKind {
    match task.window {
        Some(half_width) => ObjectiveKind::Windowed { half_width },
        None => ObjectiveKind::Instantaneous,
    }
}

/// Multistart maximization of the transfer objective of `task`.
pub fn maximize(
    task: &TransferTask,
    net: &SpinNetwork,
    config: &OptimizationConfig,
) -> Result<ControllerSet> {
    config.validate()?;
    let problem = Problem {
        net,
        input: task.input,
        output: task.output,
        time: task.time,
        objective: objective_for(task),
        orbits: orbits_for(net, task.input, task.output, config)?,
    };
    let generator = problem.generator(config);
    let controllers: Vec<Controller> = (0..config.restarts)
        .into_par_iter()
        .map(|r| problem.run_restart(config, &generator, r))
        .collect();
    Ok(ControllerSet::new(controllers))
}

/// The guess stream `maximize` uses for `task`, one entry per restart.
pub fn initial_guesses(
    task: &TransferTask,
    net: &SpinNetwork,
    config: &OptimizationConfig,
) -> Result<Vec<InitialGuess>> {
    config.validate()?;
    let problem = Problem {
        net,
        input: task.input,
        output: task.output,
        time: task.time,
        objective: objective_for(task),
        orbits: orbits_for(net, task.input, task.output, config)?,
    };
    let generator = problem.generator(config);
    Ok((0..config.restarts)
        .map(|r| generator.guess(&mut restart_rng(config.seed, r as u64)))
        .collect())
}

/// `maximize` at each fixed time in `times`. Restart indices continue across
/// times so every (time, restart) pair has its own random stream.
pub fn sweep_fixed_times(
    input: usize,
    output: usize,
    window: Option<f64>,
    times: &[f64],
    net: &SpinNetwork,
    config: &OptimizationConfig,
) -> Result<ControllerSet> {
    config.validate()?;
    let orbits = orbits_for(net, input, output, config)?;
    let problems = times
        .iter()
        .map(|&t| {
            let task = TransferTask::new(net, input, output, TimeSpec::Fixed { t }, window)?;
            Ok(Problem {
                net,
                input,
                output,
                time: task.time,
                objective: objective_for(&task),
                orbits: orbits.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let generators: Vec<GuessGenerator> = problems.iter().map(|p| p.generator(config)).collect();
    let restarts = config.restarts;
    let controllers: Vec<Controller> = (0..problems.len() * restarts)
        .into_par_iter()
        .map(|global| {
            let i = global / restarts;
            problems[i].run_restart(config, &generators[i], global)
        })
        .collect();
    Ok(ControllerSet::new(controllers))
}

/// Multistart maximization of the probability of keeping the excitation at
/// `node` over `[0, hold]`.
pub fn localize(
    net: &SpinNetwork,
    node: usize,
    hold: f64,
    config: &OptimizationConfig,
) -> Result<ControllerSet> {
    config.validate()?;
    net.check_node(node)?;
    if !(hold > 0.0 && hold.is_finite()) {
        return Err(Error::Domain(format!(
            "holding time must be positive, got {hold}"
        )));
    }
    let problem = Problem {
        net,
        input: node,
        output: node,
        time: TimeSpec::Fixed { t: 0.5 * hold },
        objective: ObjectiveKind::Localization { hold },
        orbits: orbits_for(net, node, node, config)?,
    };
    let generator = problem.generator(config);
    let controllers: Vec<Controller> = (0..config.restarts)
        .into_par_iter()
        .map(|r| problem.run_restart(config, &generator, r))
        .collect();
    Ok(ControllerSet::new(controllers))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn two_spin_chain_converges_to_rabi_optimum() {
        let net = SpinNetwork::new(2, Topology::Chain, 0.0).unwrap();
        let task =
            TransferTask::new(&net, 0, 1, TimeSpec::Free { lo: 0.0, hi: 3.0 }, None).unwrap();
        let config = OptimizationConfig {
            restarts: 8,
            ..Default::default()
        };
        let set = maximize(&task, &net, &config).unwrap();
        for c in set.iter() {
            assert!(c.infidelity < 1e-12, "{c:?}");
            assert!((c.time - FRAC_PI_2).abs() < 1e-5);
            assert_eq!(c.bias[0], c.bias[1]);
        }
    }

    #[test]
    fn fastest_selection() {
        let mk = |time: f64, fidelity: f64, restart: usize| Controller {
            bias: BiasVector::zeros(2),
            time,
            objective: ObjectiveKind::Instantaneous,
            fidelity,
            infidelity: 1.0 - fidelity,
            sensitivity_norm: None,
            provenance: Provenance {
                seed: 0,
                restart,
                iterations: 0,
                converged: true,
                failed: false,
                termination: Termination::GradientTolerance,
                grad_norm: 0.0,
                initial_time: time,
            },
        };
        let set = ControllerSet::new(vec![
            mk(5.0, 0.9999, 0),
            mk(2.0, 0.99, 1),
            mk(3.0, 0.9995, 2),
        ]);
        assert_eq!(fastest_above_threshold(&set, 0.999).unwrap().time, 3.0);
        assert_eq!(fastest_above_threshold(&set, 0.9).unwrap().time, 2.0);
        assert!(fastest_above_threshold(&set, 0.99999).is_none());
        assert!(fastest_above_threshold(&ControllerSet::default(), 0.5).is_none());
        assert_eq!(set.best().unwrap().provenance.restart, 0);
    }

    #[test]
    fn config_validation() {
        let bad = OptimizationConfig {
            restarts: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
