//! Dense complex matrix helpers shared by every module.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. Bipartite operators on
//! `A ⊗ B` use the row-major product index `a * dim_b + b`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMat = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Eigenvalues at or above `-EIG_CLIP` but below zero are treated as zero.
pub const EIG_CLIP: f64 = 1e-9;

#[inline]
pub fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

pub fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermitian_deviation(m: &CMat) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()) * re(0.5)
}

pub fn is_real(m: &CMat, tol: f64) -> bool {
    m.iter().all(|z| z.im.abs() <= tol)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = hermitize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn eigvalsh(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut v: Vec<f64> = hermitize(m).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    eigvalsh(m).first().copied().unwrap_or(0.0)
}

pub fn max_eigenvalue(m: &CMat) -> f64 {
    eigvalsh(m).last().copied().unwrap_or(0.0)
}

/// `V diag(f(λ)) V†` for Hermitian `m`.
pub fn spectral_map(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = eigh(m);
    let mut scaled = vecs.clone();
    for (k, &l) in vals.iter().enumerate() {
        let w = re(f(l));
        for r in 0..scaled.nrows() {
            scaled[(r, k)] *= w;
        }
    }
    &scaled * vecs.adjoint()
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm(m: &CMat) -> f64 {
    eigvalsh(m).iter().map(|l| l.abs()).sum()
}

pub fn trace(m: &CMat) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Real part of `tr(a b)`.
pub fn trace_product_re(a: &CMat, b: &CMat) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            let x = a[(i, k)] * b[(k, i)];
            acc += x.re;
        }
    }
    acc
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Trace out the second factor of an operator on `C^d1 ⊗ C^d2`.
pub fn partial_trace_second(m: &CMat, d1: usize, d2: usize) -> CMat {
    let mut out = CMat::zeros(d1, d1);
    for i in 0..d1 {
        for j in 0..d1 {
            let mut acc = ZERO;
            for a in 0..d2 {
                acc += m[(i * d2 + a, j * d2 + a)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Trace out the first factor of an operator on `C^d1 ⊗ C^d2`.
pub fn partial_trace_first(m: &CMat, d1: usize, d2: usize) -> CMat {
    let mut out = CMat::zeros(d2, d2);
    for a in 0..d2 {
        for b in 0..d2 {
            let mut acc = ZERO;
            for i in 0..d1 {
                acc += m[(i * d2 + a, i * d2 + b)];
            }
            out[(a, b)] = acc;
        }
    }
    out
}

/// Operator norm distance to the identity of `u† u`.
pub fn unitarity_deviation(u: &CMat) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let d = u.nrows();
    let g = u.adjoint() * u - identity(d);
    g.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Unnormalised maximally entangled projector `|Ω⟩⟨Ω|`, `|Ω⟩ = Σ_i |i⟩|i⟩`.
pub fn max_entangled_projector(d: usize) -> CMat {
    let mut m = CMat::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            m[(i * d + i, j * d + j)] = ONE;
        }
    }
    m
}

pub fn basis_projector(d: usize, i: usize) -> CMat {
    let mut m = CMat::zeros(d, d);
    m[(i, i)] = ONE;
    m
}

pub fn matrix_unit(d: usize, i: usize, j: usize) -> CMat {
    let mut m = CMat::zeros(d, d);
    m[(i, j)] = ONE;
    m
}

pub fn from_real_diag(values: &[f64]) -> CMat {
    let d = values.len();
    let mut m = CMat::zeros(d, d);
    for (i, &v) in values.iter().enumerate() {
        m[(i, i)] = re(v);
    }
    m
}

pub fn outer(v: &[Complex64]) -> CMat {
    let d = v.len();
    CMat::from_fn(d, d, |i, j| v[i] * v[j].conj())
}

/// Real entries given row by row.
pub fn real_matrix(d: usize, entries: &[f64]) -> CMat {
    assert_eq!(entries.len(), d * d);
    CMat::from_fn(d, d, |i, j| re(entries[i * d + j]))
}

pub fn pauli_x() -> CMat {
    real_matrix(2, &[0.0, 1.0, 1.0, 0.0])
}

pub fn pauli_y() -> CMat {
    CMat::from_row_slice(2, 2, &[ZERO, Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0), ZERO])
}

pub fn pauli_z() -> CMat {
    real_matrix(2, &[1.0, 0.0, 0.0, -1.0])
}

pub fn hadamard() -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    real_matrix(2, &[s, s, s, -s])
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)))
}

/// Haar-random unitary (QR of a Ginibre matrix with phase fix).
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMat {
    let g = ginibre(rng, d, d);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..d {
        let diag = r[(k, k)];
        let phase = if diag.norm() > 0.0 { diag / diag.norm() } else { ONE };
        for i in 0..d {
            q[(i, k)] *= phase;
        }
    }
    q
}

/// Random full-rank density matrix from the Hilbert–Schmidt ensemble.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMat {
    let g = ginibre(rng, d, d);
    let m = &g * g.adjoint();
    let t = trace(&m).re;
    hermitize(&(m / re(t)))
}

pub fn random_pure_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<Complex64> {
    let g = ginibre(rng, d, 1);
    let n = g.norm();
    g.iter().map(|z| z / n).collect()
}

/// Gibbs state `exp(-βH)/Z`.
pub fn gibbs_state(hamiltonian: &CMat, beta: f64) -> CMat {
    let (vals, _) = eigh(hamiltonian);
    let shift = vals.first().copied().unwrap_or(0.0);
    let unnorm = spectral_map(hamiltonian, |e| (-beta * (e - shift)).exp());
    let z = trace(&unnorm).re;
    hermitize(&(unnorm / re(z)))
}

/// Binomial coefficient as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}
