//! Blocked Cholesky and triangular solves on column-major `DMatrix<f64>`.
//!
//! The Schur complement of the larger programs reaches a few thousand rows;
//! the blocked variant pushes the bulk of the work into a matrix product.

use nalgebra::{DMatrix, DVector};

const PANEL: usize = 64;

/// Overwrites the lower triangle of `a` with its Cholesky factor. Returns
/// `false` when a non-positive pivot is met. The upper triangle is left as is.
pub(crate) fn cholesky_in_place(a: &mut DMatrix<f64>) -> bool {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let mut k = 0;
    while k < n {
        let end = (k + PANEL).min(n);
        {
            let data = a.as_mut_slice();
            for j in k..end {
                let d = data[j * n + j];
                if !(d > 0.0 && d.is_finite()) {
                    return false;
                }
                let d = d.sqrt();
                data[j * n + j] = d;
                for v in &mut data[j * n + j + 1..(j + 1) * n] {
                    *v /= d;
                }
                for jj in j + 1..end {
                    let f = data[j * n + jj];
                    if f == 0.0 {
                        continue;
                    }
                    let (left, right) = data.split_at_mut(jj * n);
                    let src = &left[j * n + jj..(j + 1) * n];
                    let dst = &mut right[jj..n];
                    for (t, s) in dst.iter_mut().zip(src) {
                        *t -= f * s;
                    }
                }
            }
        }
        if end < n {
            let m = n - end;
            let panel = a.view((end, k), (m, end - k)).clone_owned();
            let panel_t = panel.transpose();
            a.view_mut((end, end), (m, m)).gemm(-1.0, &panel, &panel_t, 1.0);
        }
        k = end;
    }
    true
}

/// Solves `L y = b` in place.
pub(crate) fn forward_substitute(l: &DMatrix<f64>, b: &mut [f64]) {
    let n = l.nrows();
    let data = l.as_slice();
    for j in 0..n {
        let yj = b[j] / data[j * n + j];
        b[j] = yj;
        if yj != 0.0 {
            for (bi, lij) in b[j + 1..].iter_mut().zip(&data[j * n + j + 1..(j + 1) * n]) {
                *bi -= lij * yj;
            }
        }
    }
}

/// Solves `Lᵀ x = b` in place.
pub(crate) fn backward_substitute(l: &DMatrix<f64>, b: &mut [f64]) {
    let n = l.nrows();
    let data = l.as_slice();
    for j in (0..n).rev() {
        let col = &data[j * n + j + 1..(j + 1) * n];
        let dot: f64 = col.iter().zip(&b[j + 1..]).map(|(a, x)| a * x).sum();
        b[j] = (b[j] - dot) / data[j * n + j];
    }
}

pub(crate) fn cholesky_solve(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let mut x = b.clone();
    forward_substitute(l, x.as_mut_slice());
    backward_substitute(l, x.as_mut_slice());
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spd(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        &g * g.transpose() + DMatrix::identity(n, n) * 0.1
    }

    #[test]
    fn matches_reference_factorization() {
        for &n in &[1usize, 7, 64, 65, 150] {
            let a = spd(n, n as u64);
            let mut l = a.clone();
            assert!(cholesky_in_place(&mut l));
            let l = l.lower_triangle();
            assert!((&l * l.transpose() - &a).amax() < 1e-10 * a.amax());
            let b = DVector::from_fn(n, |i, _| (i as f64).sin());
            let x = cholesky_solve(&l, &b);
            assert!((&a * x - b).amax() < 1e-8);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let mut a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(!cholesky_in_place(&mut a));
    }
}
