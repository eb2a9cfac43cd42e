//! Limited-memory BFGS with backtracking Armijo search and projection onto
//! a box. Minimizes; callers negate objectives they want to maximize.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsSettings {
    pub memory: usize,
    pub grad_tol: f64,
    pub max_iter: usize,
    pub armijo: f64,
    pub max_backtracks: usize,
}

impl Default for LbfgsSettings {
    fn default() -> Self {
        Self {
            memory: 10,
            grad_tol: 1e-9,
            max_iter: 1000,
            armijo: 1e-4,
            max_backtracks: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    GradientTolerance,
    MaxIterations,
    LineSearchFailed,
    Stagnated,
    NonFinite,
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    /// Euclidean norm of the projected gradient at `x`.
    pub grad_norm: f64,
    pub iterations: usize,
    pub termination: Termination,
}

impl Minimum {
    pub fn converged(&self) -> bool {
        self.termination == Termination::GradientTolerance
    }
}

/// Per-coordinate box; unbounded coordinates use infinities.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn unbounded(dim: usize) -> Self {
        Self {
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![f64::INFINITY; dim],
        }
    }

    fn project(&self, x: &mut [f64]) {
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = xi.clamp(self.lower[i], self.upper[i]);
        }
    }

    /// Gradient with components that point out of an active bound removed.
    fn projected_gradient(&self, x: &[f64], g: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(g)
            .enumerate()
            .map(|(i, (&xi, &gi))| {
                if (xi <= self.lower[i] && gi > 0.0) || (xi >= self.upper[i] && gi < 0.0) {
                    0.0
                } else {
                    gi
                }
            })
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct History {
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
    capacity: usize,
}

impl History {
    fn push(&mut self, s: Vec<f64>, y: Vec<f64>) {
        let sy = dot(&s, &y);
        if sy <= 1e-12 * norm(&s) * norm(&y) {
            return;
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
    }

    /// Two-loop recursion: approximate inverse Hessian times `q`.
    fn apply(&self, q: &[f64]) -> Vec<f64> {
        let mut r = q.to_vec();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let alpha = rho * dot(s, &r);
            for (ri, yi) in r.iter_mut().zip(y) {
                *ri -= alpha * yi;
            }
            alphas.push(alpha);
        }
        if let Some((s, y, _)) = self.pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            r.iter_mut().for_each(|ri| *ri *= gamma);
        }
        for ((s, y, rho), alpha) in self.pairs.iter().zip(alphas.into_iter().rev()) {
            let beta = rho * dot(y, &r);
            for (ri, si) in r.iter_mut().zip(s) {
                *ri += (alpha - beta) * si;
            }
        }
        r
    }
}

/// Minimizes `f` from `x0`. `f` writes the gradient into its second argument
/// and returns the value; non-finite values end the run with the best point
/// seen so far.
pub fn minimize<F>(mut f: F, x0: &[f64], bounds: &Bounds, settings: &LbfgsSettings) -> Minimum
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let dim = x0.len();
    let mut x = x0.to_vec();
    bounds.project(&mut x);
    let mut g = vec![0.0; dim];
    let mut fx = f(&x, &mut g);
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Minimum {
            x,
            value: fx,
            grad_norm: f64::NAN,
            iterations: 0,
            termination: Termination::NonFinite,
        };
    }

    let mut history = History {
        pairs: VecDeque::with_capacity(settings.memory),
        capacity: settings.memory.max(1),
    };
    let mut stalled = 0usize;
    let mut g_new = vec![0.0; dim];

    for iter in 0..settings.max_iter {
        let pg = bounds.projected_gradient(&x, &g);
        let pg_norm = norm(&pg);
        if pg_norm <= settings.grad_tol {
            return Minimum {
                x,
                value: fx,
                grad_norm: pg_norm,
                iterations: iter,
                termination: Termination::GradientTolerance,
            };
        }

        // Coordinates pinned at a bound stay out of the search direction.
        let free: Vec<bool> = pg
            .iter()
            .zip(&g)
            .map(|(p, gi)| !(*p == 0.0 && *gi != 0.0))
            .collect();
        let mut direction: Vec<f64> = history.apply(&pg).iter().map(|d| -d).collect();
        for (d, &is_free) in direction.iter_mut().zip(&free) {
            if !is_free {
                *d = 0.0;
            }
        }
        if !(dot(&direction, &pg) < 0.0) || direction.iter().any(|d| !d.is_finite()) {
            history.pairs.clear();
            direction = pg.iter().map(|v| -v).collect();
        }

        let mut accepted = None;
        for attempt in 0..2 {
            let mut alpha = if history.pairs.is_empty() {
                (1.0 / norm(&direction)).min(1.0)
            } else {
                1.0
            };
            for _ in 0..settings.max_backtracks {
                let mut trial: Vec<f64> = x
                    .iter()
                    .zip(&direction)
                    .map(|(xi, di)| xi + alpha * di)
                    .collect();
                bounds.project(&mut trial);
                let step: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
                let decrease = dot(&g, &step);
                let ft = f(&trial, &mut g_new);
                if ft.is_finite()
                    && g_new.iter().all(|v| v.is_finite())
                    && ft <= fx + settings.armijo * decrease
                {
                    accepted = Some((trial, ft, step));
                    break;
                }
                alpha *= 0.5;
            }
            if accepted.is_some() || attempt == 1 || history.pairs.is_empty() {
                break;
            }
            // Quasi-Newton direction failed: retry along steepest descent.
            history.pairs.clear();
            direction = pg.iter().map(|v| -v).collect();
        }

        let Some((trial, ft, step)) = accepted else {
            return Minimum {
                x,
                value: fx,
                grad_norm: pg_norm,
                iterations: iter,
                termination: Termination::LineSearchFailed,
            };
        };

        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        history.push(step, y);

        if fx - ft <= 1e-12 * fx.abs() {
            stalled += 1;
        } else {
            stalled = 0;
        }
        x = trial;
        fx = ft;
        std::mem::swap(&mut g, &mut g_new);

        if stalled >= 10 {
            let grad_norm = norm(&bounds.projected_gradient(&x, &g));
            let termination = if grad_norm <= settings.grad_tol {
                Termination::GradientTolerance
            } else {
                Termination::Stagnated
            };
            return Minimum {
                x,
                value: fx,
                grad_norm,
                iterations: iter + 1,
                termination,
            };
        }
    }

    let grad_norm = norm(&bounds.projected_gradient(&x, &g));
    let termination = if grad_norm <= settings.grad_tol {
        Termination::GradientTolerance
    } else {
        Termination::MaxIterations
    };
    Minimum {
        x,
        value: fx,
        grad_norm,
        iterations: settings.max_iter,
        termination,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64], g: &mut [f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
        g[1] = 200.0 * (b - a * a);
        (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
    }

    #[test]
    fn solves_rosenbrock() {
        let min = minimize(
            rosenbrock,
            &[-1.2, 1.0],
            &Bounds::unbounded(2),
            &LbfgsSettings::default(),
        );
        assert!(min.converged(), "{:?}", min.termination);
        assert!((min.x[0] - 1.0).abs() < 1e-8 && (min.x[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn respects_box() {
        // Unconstrained minimum at (3, -2); box forces x0 <= 1.
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * (x[0] - 3.0);
            g[1] = 2.0 * (x[1] + 2.0);
            (x[0] - 3.0).powi(2) + (x[1] + 2.0).powi(2)
        };
        let bounds = Bounds {
            lower: vec![f64::NEG_INFINITY, f64::NEG_INFINITY],
            upper: vec![1.0, f64::INFINITY],
        };
        let min = minimize(f, &[0.0, 0.0], &bounds, &LbfgsSettings::default());
        assert!(min.converged());
        assert_eq!(min.x[0], 1.0);
        assert!((min.x[1] + 2.0).abs() < 1e-9);
    }

    #[test]
    fn reports_non_finite_start() {
        let f = |_: &[f64], g: &mut [f64]| {
            g[0] = 0.0;
            f64::NAN
        };
        let min = minimize(f, &[0.0], &Bounds::unbounded(1), &LbfgsSettings::default());
        assert_eq!(min.termination, Termination::NonFinite);
    }
}
