//! Independent numerical oracles and random instance generators shared by
//! the integration tests.
#![allow(dead_code, clippy::excessive_precision)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spinscape::{BiasVector, SpinNetwork, SymmetryOrbits, Topology};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Central difference refined by one Richardson step (error `O(h^4)`).
pub fn derivative(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    (4.0 * d(0.5 * h) - d(h)) / 3.0
}

pub fn gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            derivative(
                |s| {
                    let mut y = x.to_vec();
                    y[i] = s;
                    f(&y)
                },
                x[i],
                h,
            )
        })
        .collect()
}

const GK_NODES: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = GK_WEIGHTS[7] * fc;
    let mut gauss = GAUSS_WEIGHTS[3] * fc;
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let pair = f(c - x) + f(c + x);
        kronrod += GK_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            gauss += GAUSS_WEIGHTS[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive 7/15-point Gauss-Kronrod quadrature to absolute tolerance `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (value, err) = gk15(f, a, b);
        if err <= tol || depth >= 40 {
            return value;
        }
        let c = 0.5 * (a + b);
        rec(f, a, c, 0.5 * tol, depth + 1) + rec(f, c, b, 0.5 * tol, depth + 1)
    }
    rec(&f, a, b, tol, 0)
}

pub struct Instance {
    pub net: SpinNetwork,
    pub bias: BiasVector,
    pub m: usize,
    pub n: usize,
    pub t: f64,
}

pub fn random_bias(rng: &mut ChaCha8Rng, n_spins: usize, scale: f64) -> BiasVector {
    BiasVector::new(
        (0..n_spins)
            .map(|_| rng.random_range(-scale..scale))
            .collect(),
    )
    .unwrap()
}

/// Ring or chain with `n_spins` in `sizes`, random bias, distinct random
/// endpoints and a readout time in `[0.3, t_max]`.
pub fn random_instance(
    rng: &mut ChaCha8Rng,
    sizes: std::ops::RangeInclusive<usize>,
    t_max: f64,
) -> Instance {
    let n_spins = rng.random_range(sizes);
    let topology = if rng.random_bool(0.5) {
        Topology::Ring
    } else {
        Topology::Chain
    };
    let net = SpinNetwork::new(n_spins, topology, 0.0).unwrap();
    let bias = random_bias(rng, n_spins, 3.0);
    let m = rng.random_range(0..n_spins);
    let mut n = rng.random_range(0..n_spins - 1);
    if n >= m {
        n += 1;
    }
    Instance {
        net,
        bias,
        m,
        n,
        t: rng.random_range(0.3..t_max),
    }
}

/// Bias invariant under the reflection exchanging `m` and `n` on a ring.
pub fn symmetric_ring_bias(
    rng: &mut ChaCha8Rng,
    n_spins: usize,
    m: usize,
    n: usize,
    scale: f64,
) -> BiasVector {
    let orbits = SymmetryOrbits::ring(n_spins, m, n).unwrap();
    let half: Vec<f64> = (0..orbits.len())
        .map(|_| rng.random_range(-scale..scale))
        .collect();
    orbits.expand(&half).unwrap()
}
