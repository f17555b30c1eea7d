//! Entropic functionals on states. Logarithms are base 2 unless noted.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::channel::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, EIG_CLIP};

/// Eigenvalues of `σ` at or above this value span its support.
pub const SUPPORT_TOL: f64 = 1e-9;

/// A real number or `+∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Infinite,
}

impl ExtReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            ExtReal::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ExtReal::Infinite)
    }

    /// Unwraps a finite value; `+∞` becomes a `SupportViolation` error.
    pub fn require_finite(self, what: &str) -> Result<f64> {
        self.finite().ok_or_else(|| Error::SupportViolation(format!("{what} is infinite")))
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(x) => write!(f, "{x}"),
            ExtReal::Infinite => write!(f, "+inf"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(x) => s.serialize_f64(*x),
            ExtReal::Infinite => s.serialize_str("+inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(ExtReal::Finite(x)),
            Raw::Text(t) if t == "+inf" || t == "inf" => Ok(ExtReal::Infinite),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("expected a number or \"+inf\", got {t:?}"))),
        }
    }
}

fn clip(l: f64) -> f64 {
    if (-EIG_CLIP..0.0).contains(&l) {
        0.0
    } else {
        l
    }
}

/// Eigen-decomposition of `σ` split into its support (eigenvalues ≥ `SUPPORT_TOL`).
struct Support {
    values: Vec<f64>,
    vectors: CMat,
    leak: f64,
}

/// Weight of `a` outside the support of `b` (both PSD).
fn support_of(a: &CMat, b: &CMat) -> Support {
    let (vals, vecs) = linalg::eigh(b);
    let keep: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] >= SUPPORT_TOL).collect();
    let mut vectors = CMat::zeros(b.nrows(), keep.len());
    for (dst, &k) in keep.iter().enumerate() {
        vectors.set_column(dst, &vecs.column(k));
    }
    let inside = (vectors.adjoint() * a * &vectors).trace().re;
    let leak = linalg::trace(a).re - inside;
    Support { values: keep.iter().map(|&k| vals[k]).collect(), vectors, leak }
}

/// `log₂ min{λ : a ≤ λ b}` for positive semidefinite `a`, `b` of any trace.
pub fn psd_dmax(a: &CMat, b: &CMat) -> Result<ExtReal> {
    if a.shape() != b.shape() || !a.is_square() {
        return Err(Error::dims("D_max operands must be square matrices of equal size"));
    }
    let sup = support_of(a, b);
    if sup.leak > SUPPORT_TOL {
        return Ok(ExtReal::Infinite);
    }
    let reduced = sup.vectors.adjoint() * a * &sup.vectors;
    let inv_sqrt: Vec<f64> = sup.values.iter().map(|l| 1.0 / l.sqrt()).collect();
    let k = inv_sqrt.len();
    let scaled = CMat::from_fn(k, k, |i, j| reduced[(i, j)] * inv_sqrt[i] * inv_sqrt[j]);
    let top = linalg::max_eigenvalue(&scaled);
    if top <= 0.0 {
        // a vanishes on the support of b: a = 0
        return Ok(ExtReal::Finite(f64::NEG_INFINITY));
    }
    Ok(ExtReal::Finite(top.log2()))
}

/// Max-relative entropy `D_max(ρ‖σ)` in bits.
pub fn state_dmax(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<ExtReal> {
    psd_dmax(rho.matrix(), sigma.matrix())
}

fn entropy_of_spectrum(vals: &[f64], log: impl Fn(f64) -> f64) -> f64 {
    vals.iter().map(|&l| clip(l)).filter(|&l| l > 0.0).map(|l| -l * log(l)).sum()
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    entropy_of_spectrum(&linalg::eigvalsh(rho.matrix()), f64::log2)
}

/// Von Neumann entropy in nats.
pub fn von_neumann_entropy_nats(rho: &DensityMatrix) -> f64 {
    entropy_of_spectrum(&linalg::eigvalsh(rho.matrix()), f64::ln)
}

/// Shannon entropy of a probability vector, in bits.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    entropy_of_spectrum(p, f64::log2)
}

/// Umegaki relative entropy `D(ρ‖σ)` in bits; `+∞` without support inclusion.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<ExtReal> {
    psd_relative_entropy(rho.matrix(), sigma.matrix())
}

/// `Tr a (log₂ a − log₂ b)` for PSD `a`, `b`.
pub(crate) fn psd_relative_entropy(a: &CMat, b: &CMat) -> Result<ExtReal> {
    if a.shape() != b.shape() {
        return Err(Error::dims("relative entropy operands differ in size"));
    }
    let sup = support_of(a, b);
    if sup.leak > SUPPORT_TOL {
        return Ok(ExtReal::Infinite);
    }
    let neg_entropy = -entropy_of_spectrum(&linalg::eigvalsh(a), f64::log2);
    let mut cross = 0.0;
    for (k, &l) in sup.values.iter().enumerate() {
        let v = sup.vectors.column(k);
        let w = (v.adjoint() * a * v)[(0, 0)].re;
        cross += w * l.log2();
    }
    Ok(ExtReal::Finite(neg_entropy - cross))
}

/// Completely dephasing map in the basis given by the columns of `basis`
/// (computational basis when `None`).
pub fn dephase(rho: &DensityMatrix, basis: Option<&CMat>) -> Result<DensityMatrix> {
    let d = rho.dim();
    let m = match basis {
        None => CMat::from_diagonal(&rho.matrix().diagonal()),
        Some(u) => {
            if u.nrows() != d || u.ncols() != d {
                return Err(Error::dims("basis matrix must be d x d"));
            }
            let dev = linalg::unitarity_deviation(u);
            if dev > crate::channel::VALIDITY_TOL {
                return Err(Error::NotUnitary { deviation: dev });
            }
            let rotated = u.adjoint() * rho.matrix() * u;
            u * CMat::from_diagonal(&rotated.diagonal()) * u.adjoint()
        }
    };
    Ok(DensityMatrix::from_trusted(m))
}

/// Relative entropy of coherence `C_r(ρ) = S(Δ(ρ)) − S(ρ)`.
pub fn coherence_rel_ent(rho: &DensityMatrix, basis: Option<&CMat>) -> Result<f64> {
    let dephased = dephase(rho, basis)?;
    Ok((von_neumann_entropy(&dephased) - von_neumann_entropy(rho)).max(0.0))
}

/// `F(ρ) = Tr(ρH) − S(ρ)/β` with `S` in nats, so that `F(ρ) − F(τ_β) = D(ρ‖τ_β)/β`
/// in natural units and the Gibbs state is the global minimiser.
pub fn free_energy(rho: &DensityMatrix, hamiltonian: &CMat, beta: f64) -> Result<f64> {
    if hamiltonian.shape() != rho.matrix().shape() {
        return Err(Error::dims("Hamiltonian and state differ in size"));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!("inverse temperature must be positive, got {beta}")));
    }
    let energy = linalg::trace_product_re(rho.matrix(), hamiltonian);
    Ok(energy - von_neumann_entropy_nats(rho) / beta)
}
