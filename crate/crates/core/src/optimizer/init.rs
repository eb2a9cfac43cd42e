//! Initial guesses: quench-inspired bias patterns on the two arcs between
//! input and output, and start times taken from the transfer peaks of a
//! uniform chain spanning the same distance.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::EigenSystem;
use crate::gradients::grad_fidelity_time;
use crate::network::{BiasVector, SpinNetwork, SymmetryOrbits, Topology};

/// Bias pattern family for initial guesses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BiasInit {
    /// Constant value on each arc.
    Constant,
    /// Tent-shaped peak centred on each arc.
    Peaks,
    /// Tent-shaped trough centred on each arc.
    Troughs,
    /// Independent uniform value per parameter.
    RandomMix,
    /// Constant, peak or trough chosen at random per arc.
    #[default]
    Mixed,
}

impl std::str::FromStr for BiasInit {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "constant" => Ok(BiasInit::Constant),
            "peaks" => Ok(BiasInit::Peaks),
            "troughs" => Ok(BiasInit::Troughs),
            "random-mix" => Ok(BiasInit::RandomMix),
            "mixed" => Ok(BiasInit::Mixed),
            other => Err(crate::Error::Domain(format!(
                "unknown bias initialisation '{other}'"
            ))),
        }
    }
}

/// Restart-specific random stream: the seed selects the key, the restart
/// index the stream, so restarts are independent of scheduling order.
pub fn restart_rng(seed: u64, restart: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart);
    rng
}

/// Local maxima of the end-to-end transfer probability of a uniform,
/// unbiased chain with `distance + 1` spins.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainPeakTable {
    pub distance: usize,
    /// `(time, probability)` in increasing time.
    pub peaks: Vec<(f64, f64)>,
}

impl ChainPeakTable {
    /// Peaks in `(0, t_max]` whose height is at least `rel_height` times the
    /// highest one.
    pub fn new(distance: usize, t_max: f64, rel_height: f64) -> Self {
        let distance = distance.max(1);
        let net =
            SpinNetwork::new(distance + 1, Topology::Chain, 0.0).expect("chain of >= 2 spins");
        let eig = EigenSystem::from_network(&net, &BiasVector::zeros(distance + 1))
            .expect("uniform chain");
        let (m, n) = (0, distance);
        let dp = |t: f64| grad_fidelity_time(&eig, m, n, t);

        let dt = 0.01;
        let mut peaks = Vec::new();
        let mut t = dt;
        let mut prev = dp(0.5 * dt);
        while t <= t_max + dt {
            let cur = dp(t + 0.5 * dt);
            if prev > 0.0 && cur <= 0.0 {
                // Bisection on the sign change of dp/dt.
                let (mut lo, mut hi) = (t - 0.5 * dt, t + 0.5 * dt);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if dp(mid) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let tp = 0.5 * (lo + hi);
                if tp <= t_max {
                    peaks.push((tp, eig.fidelity(m, n, tp)));
                }
            }
            prev = cur;
            t += dt;
        }
        let top = peaks.iter().map(|p| p.1).fold(0.0, f64::max);
        peaks.retain(|p| p.1 >= rel_height * top);
        Self { distance, peaks }
    }

    pub fn times(&self) -> Vec<f64> {
        self.peaks.iter().map(|p| p.0).collect()
    }
}

/// One starting point: optimizer coordinates for the biases (orbit values
/// in symmetric mode, full vector otherwise) and a start time.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialGuess {
    pub bias_params: Vec<f64>,
    pub time: f64,
}

/// Everything needed to draw initial guesses for one problem.
#[derive(Debug, Clone)]
pub(crate) struct GuessGenerator {
    pub n_spins: usize,
    pub input: usize,
    pub output: usize,
    pub orbits: Option<SymmetryOrbits>,
    pub pattern: BiasInit,
    pub amplitude: (f64, f64),
    /// Candidate start times; a single entry for fixed-time problems.
    pub times: Vec<f64>,
}

impl GuessGenerator {
    pub fn guess(&self, rng: &mut ChaCha8Rng) -> InitialGuess {
        let full = self.bias_pattern(rng);
        let bias_params = match &self.orbits {
            Some(orbits) if self.pattern == BiasInit::RandomMix => {
                let a = self.sample_amplitude(rng);
                (0..orbits.len())
                    .map(|_| rng.random_range(-a..=a))
                    .collect()
            }
            Some(orbits) => orbits.project(&full),
            None => full.into_inner(),
        };
        let time = if self.times.len() == 1 {
            self.times[0]
        } else {
            self.times[rng.random_range(0..self.times.len())]
        };
        InitialGuess { bias_params, time }
    }

    fn sample_amplitude(&self, rng: &mut ChaCha8Rng) -> f64 {
        let (lo, hi) = self.amplitude;
        if hi <= lo {
            return lo;
        }
        (rng.random_range(lo.ln()..hi.ln())).exp()
    }

    fn bias_pattern(&self, rng: &mut ChaCha8Rng) -> BiasVector {
        let size = self.n_spins;
        let mut d = vec![0.0; size];
        let walk = |from: usize, to: usize| -> Vec<usize> {
            // Nodes strictly between `from` and `to` walking forward mod N.
            let mut nodes = Vec::new();
            let mut i = (from + 1) % size;
            while i != to {
                nodes.push(i);
                i = (i + 1) % size;
            }
            nodes
        };
        let arcs = if self.input == self.output {
            let a = self.sample_amplitude(rng);
            d[self.input] = if rng.random_bool(0.5) { a } else { -a };
            vec![walk(self.input, self.input)]
        } else {
            vec![walk(self.input, self.output), walk(self.output, self.input)]
        };
        for arc in arcs {
            if arc.is_empty() {
                continue;
            }
            let kind = match self.pattern {
                BiasInit::Mixed => {
                    [BiasInit::Constant, BiasInit::Peaks, BiasInit::Troughs][rng.random_range(0..3)]
                }
                other => other,
            };
            let a = self.sample_amplitude(rng);
            let centre = 0.5 * (arc.len() as f64 - 1.0);
            for (pos, &node) in arc.iter().enumerate() {
                let tent = 1.0 - (pos as f64 - centre).abs() / (centre + 1.0);
                d[node] = match kind {
                    BiasInit::Constant => a,
                    BiasInit::Peaks => a * tent,
                    BiasInit::Troughs => -a * tent,
                    _ => rng.random_range(-a..=a),
                };
            }
            if kind == BiasInit::Constant && rng.random_bool(0.5) {
                arc.iter().for_each(|&node| d[node] = -d[node]);
            }
        }
        BiasVector::new(d).expect("finite pattern")
    }
}
