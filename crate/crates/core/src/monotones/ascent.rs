//! Multi-start gradient ascent on the unit sphere of `ℝⁿ`.
//!
//! Objectives are scale invariant (they normalise their argument), so the
//! finite-difference gradient is tangent up to rounding; it is projected
//! anyway.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Settings of the heuristic optimizers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AscentOptions {
    /// Number of starting points, explicit starts included.
    pub starts: usize,
    pub max_iterations: usize,
    /// Stop when the projected gradient norm falls below this.
    pub gradient_tolerance: f64,
    pub seed: u64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self { starts: 20, max_iterations: 300, gradient_tolerance: 1e-9, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Ascent {
    pub value: f64,
    pub point: Vec<f64>,
}

const FD_STEP: f64 = 1e-6;
const ARMIJO: f64 = 1e-4;

fn normalize(x: &mut [f64]) -> bool {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(n > 0.0) || !n.is_finite() {
        return false;
    }
    x.iter_mut().for_each(|v| *v /= n);
    true
}

fn gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut probe = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for i in 0..x.len() {
        let xi = x[i];
        probe[i] = xi + FD_STEP;
        let up = f(&probe);
        probe[i] = xi - FD_STEP;
        let down = f(&probe);
        probe[i] = xi;
        g[i] = (up - down) / (2.0 * FD_STEP);
        if !g[i].is_finite() {
            g[i] = 0.0;
        }
    }
    // tangent projection
    let radial: f64 = g.iter().zip(x).map(|(a, b)| a * b).sum();
    g.iter_mut().zip(x).for_each(|(gi, xi)| *gi -= radial * xi);
    g
}

fn climb(f: &dyn Fn(&[f64]) -> f64, mut x: Vec<f64>, opts: &AscentOptions) -> (f64, Vec<f64>) {
    let mut fx = f(&x);
    if !fx.is_finite() {
        return (f64::NEG_INFINITY, x);
    }
    let mut step = 1.0;
    for _ in 0..opts.max_iterations {
        let g = gradient(f, &x);
        let gg: f64 = g.iter().map(|v| v * v).sum();
        if gg.sqrt() < opts.gradient_tolerance {
            break;
        }
        let mut accepted = false;
        while step > 1e-14 {
            let mut y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a + step * b).collect();
            if normalize(&mut y) {
                let fy = f(&y);
                if fy.is_finite() && fy >= fx + ARMIJO * step * gg {
                    x = y;
                    fx = fy;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        step = (step * 2.0).min(1e3);
    }
    (fx, x)
}

/// Maximises `f` over unit vectors of length `n`, starting from each of
/// `initial` (normalised) and then from random Gaussian points until
/// `opts.starts` runs have been made. Ties go to the earliest start.
pub(crate) fn maximize_on_sphere(f: &dyn Fn(&[f64]) -> f64, n: usize, initial: Vec<Vec<f64>>, opts: &AscentOptions) -> Ascent {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let total = opts.starts.max(initial.len()).max(1);
    let mut best = Ascent { value: f64::NEG_INFINITY, point: vec![0.0; n] };
    let mut explicit = initial.into_iter();
    for _ in 0..total {
        let mut x = explicit.next().unwrap_or_else(|| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect());
        debug_assert_eq!(x.len(), n);
        if !normalize(&mut x) {
            continue;
        }
        let (v, p) = climb(f, x, opts);
        if v > best.value {
            best = Ascent { value: v, point: p };
        }
    }
    best
}
