//! `sinc(x) = sin(x)/x` with its removable singularity handled, plus the
//! window-averaged cosine kernel used by the readout-window objective.

/// Below this magnitude `sinc` is evaluated by its Taylor polynomial.
const SINC_TAYLOR: f64 = 1e-4;

/// Below this magnitude the derivatives use their power series.
const SERIES_CUTOFF: f64 = 1.0;

pub fn sinc(x: f64) -> f64 {
    if x.abs() < SINC_TAYLOR {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// `k`-th derivative of `sinc`, `k <= 3`.
pub fn sinc_derivative(x: f64, k: u32) -> f64 {
    if k == 0 {
        return sinc(x);
    }
    if x.abs() < SERIES_CUTOFF {
        return sinc_series_derivative(x, k);
    }
    let (s, c) = x.sin_cos();
    match k {
        1 => (x * c - s) / (x * x),
        2 => (-x * x * s - 2.0 * x * c + 2.0 * s) / (x * x * x),
        3 => (-x * x * x * c + 3.0 * x * x * s + 6.0 * x * c - 6.0 * s) / (x * x * x * x),
        _ => unimplemented!("sinc derivatives above third order"),
    }
}

/// Term-wise derivative of `sum_j (-1)^j x^{2j} / (2j+1)!`.
fn sinc_series_derivative(x: f64, k: u32) -> f64 {
    let mut sum = 0.0;
    // coefficient of x^{2j}: (-1)^j / (2j+1)!
    let mut coeff = 1.0;
    for j in 0..14u32 {
        if j > 0 {
            let a = (2 * j) as f64;
            coeff *= -1.0 / (a * (a + 1.0));
        }
        let p = 2 * j;
        if p < k {
            continue;
        }
        // d^k/dx^k x^p = p!/(p-k)! x^{p-k}
        let mut falling = 1.0;
        for r in 0..k {
            falling *= (p - r) as f64;
        }
        sum += coeff * falling * x.powi((p - k) as i32);
    }
    sum
}

/// Window average of `cos(w t)` over `t in [center - half, center + half]`,
/// `cos(w center) sinc(w half)`, and its derivatives in `w`.
#[derive(Debug, Clone, Copy)]
pub struct WindowKernel {
    pub center: f64,
    pub half: f64,
}

impl WindowKernel {
    pub fn value(&self, w: f64) -> f64 {
        (w * self.center).cos() * sinc(w * self.half)
    }

    /// `d^k/dw^k` for `k <= 3` by Leibniz over `cos(w center) * sinc(w half)`.
    pub fn derivative(&self, w: f64, k: u32) -> f64 {
        let t = self.center;
        let (s, c) = (w * t).sin_cos();
        let f = [c, -t * s, -t * t * c, t * t * t * s];
        let mut g = [0.0; 4];
        let mut hp = 1.0;
        for (j, gj) in g.iter_mut().enumerate().take(k as usize + 1) {
            *gj = hp * sinc_derivative(w * self.half, j as u32);
            hp *= self.half;
        }
        let binom = [
            [1.0, 0.0, 0.0, 0.0],
            [1.0, 1.0, 0.0, 0.0],
            [1.0, 2.0, 1.0, 0.0],
            [1.0, 3.0, 3.0, 1.0],
        ];
        (0..=k as usize)
            .map(|j| binom[k as usize][j] * f[k as usize - j] * g[j])
            .sum()
    }

    /// Divided difference `(F(a) - F(b)) / (a - b)`, evaluated by a Taylor
    /// expansion about the midpoint when `a` and `b` nearly coincide.
    pub fn divided_difference(&self, a: f64, b: f64) -> f64 {
        let d = a - b;
        let reach = self.center.abs() + self.half.abs();
        if (d * reach).abs() < 1e-2 {
            let mid = 0.5 * (a + b);
            self.derivative(mid, 1) + self.derivative(mid, 3) * d * d / 24.0
        } else {
            (self.value(a) - self.value(b)) / d
        }
    }
}
