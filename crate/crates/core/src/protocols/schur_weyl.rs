//! Trace distance between the qubit states `(1/n) Σᵢ b^{⊗i−1} ⊗ a ⊗ b^{⊗n−i}`
//! and `b^{⊗n}` without forming `2ⁿ`-dimensional matrices.
//!
//! Both operators are permutation invariant, so on
//! `(ℂ²)^{⊗n} = ⊕_j V_j ⊗ ℂ^{m_j}` they act as `X_j ⊗ I`. For `g ∈ GL(2)`,
//! `g^{⊗n}` acts on the spin-`j` irrep as `det(g)^{n/2−j} Sym^{2j}(g)`, and
//! the mixture is `(1/n) d/dt (b + t a)^{⊗n}` at `t = 0`.

use std::ops::{Add, Mul};

use num_complex::Complex64;

use crate::linalg::{self, binomial, CMat};

/// `v + ε d` with `ε² = 0`.
#[derive(Clone, Copy, Debug)]
struct Dual {
    v: Complex64,
    d: Complex64,
}

impl Dual {
    const ZERO: Dual = Dual { v: Complex64::new(0.0, 0.0), d: Complex64::new(0.0, 0.0) };
    const ONE: Dual = Dual { v: Complex64::new(1.0, 0.0), d: Complex64::new(0.0, 0.0) };

    fn powi(self, k: usize) -> Dual {
        (0..k).fold(Dual::ONE, |acc, _| acc * self)
    }

    fn scale(self, s: f64) -> Dual {
        Dual { v: self.v * s, d: self.d * s }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual { v: self.v + o.v, d: self.d + o.d }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual { v: self.v * o.v, d: self.v * o.d + self.d * o.v }
    }
}

/// `Sym^m(g)` in the orthonormal Dicke basis, `k` = number of excitations.
fn symmetric_power(g: &[[Dual; 2]; 2], m: usize) -> Vec<Vec<Dual>> {
    let (g00, g01, g10, g11) = (g[0][0], g[0][1], g[1][0], g[1][1]);
    // cached powers
    let pw = |x: Dual| -> Vec<Dual> {
        let mut v = Vec::with_capacity(m + 1);
        let mut acc = Dual::ONE;
        for _ in 0..=m {
            v.push(acc);
            acc = acc * x;
        }
        v
    };
    let (p00, p01, p10, p11) = (pw(g00), pw(g01), pw(g10), pw(g11));
    let mut out = vec![vec![Dual::ZERO; m + 1]; m + 1];
    for l in 0..=m {
        for k in 0..=m {
            let mut acc = Dual::ZERO;
            let lo = k.saturating_sub(m - l);
            for r in lo..=l.min(k) {
                let c = binomial(l, r) * binomial(m - l, k - r);
                acc = acc + (p11[r] * p01[l - r] * p10[k - r] * p00[m + r - l - k]).scale(c);
            }
            out[k][l] = acc.scale((binomial(m, l) / binomial(m, k)).sqrt());
        }
    }
    out
}

/// `½‖(1/n) Σᵢ b^{⊗i−1} ⊗ a ⊗ b^{⊗n−i} − b^{⊗n}‖₁` for qubit states `a`, `b`.
pub(crate) fn convex_split_trace_distance(a: &CMat, b: &CMat, n: usize) -> f64 {
    debug_assert!(a.nrows() == 2 && b.nrows() == 2);
    let g = [
        [Dual { v: b[(0, 0)], d: a[(0, 0)] }, Dual { v: b[(0, 1)], d: a[(0, 1)] }],
        [Dual { v: b[(1, 0)], d: a[(1, 0)] }, Dual { v: b[(1, 1)], d: a[(1, 1)] }],
    ];
    let det = g[0][0] * g[1][1] + (g[0][1] * g[1][0]).scale(-1.0);
    let mut total = 0.0;
    for k in 0..=n / 2 {
        let m = n - 2 * k;
        let multiplicity = binomial(n, k) - if k > 0 { binomial(n, k - 1) } else { 0.0 };
        let sym = symmetric_power(&g, m);
        let dk = det.powi(k);
        let block = CMat::from_fn(m + 1, m + 1, |r, c| {
            let x = dk * sym[r][c];
            x.d / n as f64 - x.v
        });
        total += multiplicity * linalg::trace_norm(&linalg::hermitize(&block));
    }
    0.5 * total
}

/// Same quantity from dense `dⁿ`-dimensional matrices.
pub(crate) fn convex_split_trace_distance_dense(a: &CMat, b: &CMat, n: usize) -> f64 {
    let d = b.nrows();
    let mut bn = linalg::identity(1);
    for _ in 0..n {
        bn = linalg::kron(&bn, b);
    }
    let mut gamma = CMat::zeros(bn.nrows(), bn.ncols());
    for i in 0..n {
        let mut term = linalg::identity(1);
        for j in 0..n {
            term = linalg::kron(&term, if i == j { a } else { b });
        }
        gamma += term;
    }
    gamma /= linalg::re(n as f64);
    debug_assert_eq!(gamma.nrows(), d.pow(n as u32));
    0.5 * linalg::trace_norm(&(gamma - bn))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::DensityMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_dense_computation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=6 {
            let a = DensityMatrix::random(&mut rng, 2).into_inner();
            let b = DensityMatrix::random(&mut rng, 2).into_inner();
            let fast = convex_split_trace_distance(&a, &b, n);
            let dense = convex_split_trace_distance_dense(&a, &b, n);
            assert!((fast - dense).abs() < 1e-10, "n = {n}: {fast} vs {dense}");
        }
    }

    #[test]
    fn symmetric_power_of_identity_is_identity() {
        let g = [[Dual::ONE, Dual::ZERO], [Dual::ZERO, Dual::ONE]];
        let s = symmetric_power(&g, 5);
        for (k, row) in s.iter().enumerate() {
            for (l, x) in row.iter().enumerate() {
                assert!((x.v - if k == l { linalg::re(1.0) } else { linalg::re(0.0) }).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn equal_states_give_zero() {
        let b = DensityMatrix::maximally_mixed(2).into_inner();
        assert!(convex_split_trace_distance(&b, &b, 16) < 1e-12);
    }
}
