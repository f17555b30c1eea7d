//! Channels stored canonically as unnormalised Choi matrices.
//!
//! The Choi matrix of `N : A → B` is `J = Σ_ij |i⟩⟨j| ⊗ N(|i⟩⟨j|)`, input
//! factor first, so `J[(i·d_out + a, j·d_out + b)] = ⟨a|N(|i⟩⟨j|)|b⟩` and
//! `Tr J = d_in` for a trace-preserving map.

mod io;

pub(crate) use io::{cmat_json, opt_cmat_json};
pub use io::{load_channel, save_channel, ChannelDocument};

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, re, CMat, ZERO};

/// Entrywise Hermiticity tolerance.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Tolerance for positivity, unit trace, trace preservation and unitarity.
pub const VALIDITY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(CMat);

impl HermitianMatrix {
    pub fn new(m: CMat) -> Result<Self> {
        let deviation = linalg::hermitian_deviation(&m);
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self(linalg::hermitize(&m)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_inner(self) -> CMat {
        self.0
    }
}

/// Positive semidefinite, unit-trace Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(CMat);

impl DensityMatrix {
    pub fn new(m: CMat) -> Result<Self> {
        let h = HermitianMatrix::new(m)?.into_inner();
        let tr = linalg::trace(&h).re;
        if (tr - 1.0).abs() > VALIDITY_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min = linalg::min_eigenvalue(&h);
        if min < -VALIDITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self(h))
    }

    /// Wraps a matrix that is known to be a state up to rounding; rescales the trace.
    pub(crate) fn from_trusted(m: CMat) -> Self {
        let h = linalg::hermitize(&m);
        let tr = linalg::trace(&h).re;
        Self(h / re(tr))
    }

    pub fn pure(amplitudes: &[Complex64]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let v: Vec<Complex64> = amplitudes.iter().map(|z| z / norm).collect();
        Ok(Self(linalg::outer(&v)))
    }

    pub fn basis(d: usize, i: usize) -> Self {
        Self(linalg::basis_projector(d, i))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self(linalg::identity(d) / re(d as f64))
    }

    pub fn plus() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self(linalg::outer(&[re(s), re(s)]))
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Self {
        Self(linalg::random_density(rng, d))
    }

    pub fn random_pure<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Self {
        Self(linalg::outer(&linalg::random_pure_vector(rng, d)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_inner(self) -> CMat {
        self.0
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        Self(linalg::kron(&self.0, &other.0))
    }

    /// Diagonal in the computational basis.
    pub fn diagonal(&self) -> Vec<f64> {
        self.0.diagonal().iter().map(|z| z.re).collect()
    }
}

/// The ways a channel can be specified before canonicalisation.
#[derive(Clone, Debug)]
pub enum ChannelRepr {
    Kraus { dim_in: usize, dim_out: usize, operators: Vec<CMat> },
    Choi { dim_in: usize, dim_out: usize, matrix: CMat },
    Unitary(CMat),
    Cq { states: Vec<CMat> },
}

#[derive(Clone, Debug)]
pub struct Channel {
    dim_in: usize,
    dim_out: usize,
    choi: CMat,
    label: Option<String>,
}

/// Canonicalise any representation into a validated Choi matrix.
pub fn to_choi(repr: &ChannelRepr) -> Result<Channel> {
    match repr {
        ChannelRepr::Kraus { dim_in, dim_out, operators } => {
            let (din, dout) = (*dim_in, *dim_out);
            if operators.is_empty() {
                return Err(Error::dims("empty Kraus list"));
            }
            let mut completeness = CMat::zeros(din, din);
            let mut choi = CMat::zeros(din * dout, din * dout);
            for k in operators {
                if k.nrows() != dout || k.ncols() != din {
                    return Err(Error::dims(format!("Kraus operator is {}x{}, expected {dout}x{din}", k.nrows(), k.ncols())));
                }
                completeness += k.adjoint() * k;
                // vec(K) with input index first: v[(i, a)] = K[a][i]
                let v: Vec<Complex64> = (0..din).flat_map(|i| (0..dout).map(move |a| (i, a))).map(|(i, a)| k[(a, i)]).collect();
                choi += linalg::outer(&v);
            }
            let deviation = linalg::max_abs_diff(&completeness, &linalg::identity(din));
            if deviation > VALIDITY_TOL {
                return Err(Error::NonTracePreserving { deviation });
            }
            Channel::from_choi(din, dout, choi)
        }
        ChannelRepr::Choi { dim_in, dim_out, matrix } => Channel::from_choi(*dim_in, *dim_out, matrix.clone()),
        ChannelRepr::Unitary(u) => {
            if !u.is_square() {
                return Err(Error::dims("unitary must be square"));
            }
            let deviation = linalg::unitarity_deviation(u);
            if deviation > VALIDITY_TOL {
                return Err(Error::NonTracePreserving { deviation });
            }
            let d = u.nrows();
            to_choi(&ChannelRepr::Kraus { dim_in: d, dim_out: d, operators: vec![u.clone()] })
        }
        ChannelRepr::Cq { states } => {
            let din = states.len();
            let dout = states.first().map(|s| s.nrows()).ok_or_else(|| Error::dims("empty cq state list"))?;
            let mut choi = CMat::zeros(din * dout, din * dout);
            for (i, s) in states.iter().enumerate() {
                if s.nrows() != dout || s.ncols() != dout {
                    return Err(Error::dims("cq states must share one dimension"));
                }
                let s = DensityMatrix::new(s.clone())?;
                choi.view_mut((i * dout, i * dout), (dout, dout)).copy_from(s.matrix());
            }
            Channel::from_choi(din, dout, choi)
        }
    }
}

impl Channel {
    /// Validates complete positivity and trace preservation.
    pub fn from_choi(dim_in: usize, dim_out: usize, choi: CMat) -> Result<Self> {
        let ch = Self::from_choi_unchecked(dim_in, dim_out, choi)?;
        let min_eigenvalue = linalg::min_eigenvalue(&ch.choi);
        if min_eigenvalue < -VALIDITY_TOL {
            return Err(Error::NonCompletelyPositive { min_eigenvalue });
        }
        let deviation = ch.tp_deviation();
        if deviation > VALIDITY_TOL {
            return Err(Error::NonTracePreserving { deviation });
        }
        Ok(ch)
    }

    /// Checks shape and Hermiticity only; used for solver witnesses that are
    /// CPTP up to solver tolerance.
    pub(crate) fn from_choi_unchecked(dim_in: usize, dim_out: usize, choi: CMat) -> Result<Self> {
        if dim_in == 0 || dim_out == 0 {
            return Err(Error::dims("dimensions must be positive"));
        }
        if choi.nrows() != dim_in * dim_out || choi.ncols() != dim_in * dim_out {
            return Err(Error::dims(format!("Choi matrix is {}x{}, expected {n}x{n}", choi.nrows(), choi.ncols(), n = dim_in * dim_out)));
        }
        let choi = HermitianMatrix::new(choi)?.into_inner();
        Ok(Self { dim_in, dim_out, choi, label: None })
    }

    pub fn identity(d: usize) -> Self {
        Self { dim_in: d, dim_out: d, choi: linalg::max_entangled_projector(d), label: Some("identity".into()) }
    }

    pub fn unitary(u: &CMat) -> Result<Self> {
        to_choi(&ChannelRepr::Unitary(u.clone()))
    }

    pub fn kraus(dim_in: usize, dim_out: usize, operators: Vec<CMat>) -> Result<Self> {
        to_choi(&ChannelRepr::Kraus { dim_in, dim_out, operators })
    }

    /// Replacer channel `ρ ↦ Tr(ρ) σ`.
    pub fn constant(dim_in: usize, sigma: &DensityMatrix) -> Self {
        Self { dim_in, dim_out: sigma.dim(), choi: linalg::kron(&linalg::identity(dim_in), sigma.matrix()), label: Some("constant".into()) }
    }

    /// Classical-quantum channel `ρ ↦ Σ_i ⟨i|ρ|i⟩ σ_i`.
    pub fn cq(states: &[DensityMatrix]) -> Result<Self> {
        to_choi(&ChannelRepr::Cq { states: states.iter().map(|s| s.matrix().clone()).collect() })
    }

    /// Completely dephasing channel in the computational basis.
    pub fn dephasing(d: usize) -> Self {
        let states: Vec<DensityMatrix> = (0..d).map(|i| DensityMatrix::basis(d, i)).collect();
        let mut ch = Self::cq(&states).expect("basis states are valid");
        ch.label = Some("dephasing".into());
        ch
    }

    /// `ρ ↦ (1-p) ρ + p Tr(ρ) I/d`.
    pub fn depolarizing(d: usize, p: f64) -> Self {
        let id = Self::identity(d);
        let full = Self::constant(d, &DensityMatrix::maximally_mixed(d));
        let mut ch = Self::mix(&[(1.0 - p, &id), (p, &full)]).expect("same dimensions");
        ch.label = Some(format!("depolarizing({p})"));
        ch
    }

    /// Amplitude damping with decay probability `gamma`.
    pub fn amplitude_damping(gamma: f64) -> Self {
        let k0 = linalg::real_matrix(2, &[1.0, 0.0, 0.0, (1.0 - gamma).sqrt()]);
        let k1 = linalg::real_matrix(2, &[0.0, gamma.sqrt(), 0.0, 0.0]);
        let mut ch = Self::kraus(2, 2, vec![k0, k1]).expect("valid Kraus pair");
        ch.label = Some(format!("amplitude_damping({gamma})"));
        ch
    }

    /// Trace over the first factor of `C^d_traced ⊗ C^d_kept`.
    pub fn partial_trace_first(d_traced: usize, d_kept: usize) -> Self {
        let ops = (0..d_traced)
            .map(|t| {
                let mut k = CMat::zeros(d_kept, d_traced * d_kept);
                for a in 0..d_kept {
                    k[(a, t * d_kept + a)] = linalg::ONE;
                }
                k
            })
            .collect();
        Self::kraus(d_traced * d_kept, d_kept, ops).expect("partial trace Kraus operators")
    }

    /// Random channel: Choi matrix of a Ginibre PSD matrix, renormalised to be TP.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, dim_in: usize, dim_out: usize) -> Self {
        let n = dim_in * dim_out;
        let g = linalg::ginibre(rng, n, n);
        let j0 = &g * g.adjoint();
        let t = linalg::partial_trace_second(&j0, dim_in, dim_out);
        let t_inv_sqrt = linalg::spectral_map(&t, |x| 1.0 / x.sqrt());
        let a = linalg::kron(&t_inv_sqrt, &linalg::identity(dim_out));
        let choi = linalg::hermitize(&(&a * j0 * &a));
        Self { dim_in, dim_out, choi, label: Some("random".into()) }
    }

    /// Haar-random unitary channel.
    pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Self {
        Self::unitary(&linalg::random_unitary(rng, d)).expect("Haar unitary")
    }

    /// Convex (or general real) combination of channels with equal dimensions.
    pub fn mix(terms: &[(f64, &Channel)]) -> Result<Self> {
        let (_, first) = terms.first().ok_or_else(|| Error::dims("empty mixture"))?;
        let mut choi = CMat::zeros(first.choi.nrows(), first.choi.ncols());
        for (w, ch) in terms {
            if ch.dim_in != first.dim_in || ch.dim_out != first.dim_out {
                return Err(Error::dims("mixture of channels with different dimensions"));
            }
            choi += &ch.choi * re(*w);
        }
        Ok(Self { dim_in: first.dim_in, dim_out: first.dim_out, choi, label: None })
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn choi(&self) -> &CMat {
        &self.choi
    }

    /// Choi state `J / d_in`.
    pub fn choi_state(&self) -> DensityMatrix {
        DensityMatrix::from_trusted(&self.choi / re(self.dim_in as f64))
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    /// `‖Tr_out J − I‖_max`.
    pub fn tp_deviation(&self) -> f64 {
        let t = linalg::partial_trace_second(&self.choi, self.dim_in, self.dim_out);
        linalg::max_abs_diff(&t, &linalg::identity(self.dim_in))
    }

    /// Action on an arbitrary (not necessarily Hermitian) input matrix.
    pub fn apply_matrix(&self, x: &CMat) -> Result<CMat> {
        if x.nrows() != self.dim_in || x.ncols() != self.dim_in {
            return Err(Error::dims(format!("input is {}x{}, channel expects {}", x.nrows(), x.ncols(), self.dim_in)));
        }
        let (din, dout) = (self.dim_in, self.dim_out);
        let mut out = CMat::zeros(dout, dout);
        for i in 0..din {
            for j in 0..din {
                let w = x[(i, j)];
                if w == ZERO {
                    continue;
                }
                for a in 0..dout {
                    for b in 0..dout {
                        out[(a, b)] += self.choi[(i * dout + a, j * dout + b)] * w;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `Tr_in[J (ρᵀ ⊗ I)]`.
    pub fn apply(&self, state: &DensityMatrix) -> Result<DensityMatrix> {
        Ok(DensityMatrix::from_trusted(self.apply_matrix(state.matrix())?))
    }

    /// `(N ⊗ id_R)(ρ)` for a state on `A ⊗ R`.
    pub fn apply_extended(&self, state: &CMat, dim_ref: usize) -> Result<CMat> {
        let ext = self.tensor(&Channel::identity(dim_ref));
        ext.apply_matrix(state)
    }

    /// Choi matrix of `second ∘ first`.
    pub fn compose(second: &Channel, first: &Channel) -> Result<Channel> {
        if first.dim_out != second.dim_in {
            return Err(Error::dims(format!("cannot compose: first outputs {} but second expects {}", first.dim_out, second.dim_in)));
        }
        let (din, dmid, dout) = (first.dim_in, first.dim_out, second.dim_out);
        let mut choi = CMat::zeros(din * dout, din * dout);
        for i in 0..din {
            for j in 0..din {
                let block = first.choi.view((i * dmid, j * dmid), (dmid, dmid)).into_owned();
                let image = second.apply_matrix(&block)?;
                choi.view_mut((i * dout, j * dout), (dout, dout)).copy_from(&image);
            }
        }
        Ok(Channel { dim_in: din, dim_out: dout, choi: linalg::hermitize(&choi), label: None })
    }

    /// Parallel composition; composite indices are `(in_a, in_b)` and `(out_a, out_b)`.
    pub fn tensor(&self, other: &Channel) -> Channel {
        let (ia, oa, ib, ob) = (self.dim_in, self.dim_out, other.dim_in, other.dim_out);
        let din = ia * ib;
        let dout = oa * ob;
        let mut choi = CMat::zeros(din * dout, din * dout);
        for i1 in 0..ia {
            for j1 in 0..ia {
                for a1 in 0..oa {
                    for b1 in 0..oa {
                        let x = self.choi[(i1 * oa + a1, j1 * oa + b1)];
                        if x == ZERO {
                            continue;
                        }
                        for i2 in 0..ib {
                            for j2 in 0..ib {
                                for a2 in 0..ob {
                                    for b2 in 0..ob {
                                        let y = other.choi[(i2 * ob + a2, j2 * ob + b2)];
                                        let r = (i1 * ib + i2) * dout + a1 * ob + a2;
                                        let c = (j1 * ib + j2) * dout + b1 * ob + b2;
                                        choi[(r, c)] = x * y;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Channel { dim_in: din, dim_out: dout, choi, label: None }
    }

    /// `N^{⊗n}`.
    pub fn tensor_power(&self, n: usize) -> Channel {
        let mut acc = Channel::identity(1);
        for _ in 0..n {
            acc = acc.tensor(self);
        }
        acc
    }

    /// Conjugate by system permutations: the result is `P_out ∘ N ∘ P_in†`,
    /// where position `j` of the permuted system holds old factor `perm[j]`.
    pub fn permute_systems(&self, dims_in: &[usize], dims_out: &[usize], perm: &[usize]) -> Result<Channel> {
        if dims_in.iter().product::<usize>() != self.dim_in || dims_out.iter().product::<usize>() != self.dim_out {
            return Err(Error::dims("factor dimensions do not multiply to the channel dimensions"));
        }
        if dims_in.len() != perm.len() || dims_out.len() != perm.len() {
            return Err(Error::dims("permutation length differs from the factor count"));
        }
        let p_in = permutation_unitary(dims_in, perm)?;
        let p_out = permutation_unitary(dims_out, perm)?;
        let pre = Channel::unitary(&p_in.adjoint())?;
        let post = Channel::unitary(&p_out)?;
        let inner = Channel::compose(self, &pre)?;
        Channel::compose(&post, &inner)
    }

    /// States `σ_i = N(|i⟩⟨i|)` if the Choi matrix is block diagonal in the
    /// input basis (within `tol`).
    pub fn cq_states(&self, tol: f64) -> Option<Vec<DensityMatrix>> {
        let (din, dout) = (self.dim_in, self.dim_out);
        for i in 0..din {
            for j in 0..din {
                if i == j {
                    continue;
                }
                let block = self.choi.view((i * dout, j * dout), (dout, dout));
                if block.iter().any(|z| z.norm() > tol) {
                    return None;
                }
            }
        }
        Some((0..din).map(|i| DensityMatrix::from_trusted(self.choi.view((i * dout, i * dout), (dout, dout)).into_owned())).collect())
    }

    /// True when the output does not depend on the input.
    pub fn is_constant(&self, tol: f64) -> bool {
        linalg::max_abs_diff(&self.choi, &self.constant_part()) <= tol
    }

    /// `I ⊗ Tr_in J / d_in`: the Choi matrix of `N ∘ (complete depolarisation)`.
    pub fn constant_part(&self) -> CMat {
        let marginal = linalg::partial_trace_first(&self.choi, self.dim_in, self.dim_out) / re(self.dim_in as f64);
        linalg::kron(&linalg::identity(self.dim_in), &marginal)
    }

    /// Output of the channel on the maximally mixed state.
    pub fn output_on_maximally_mixed(&self) -> DensityMatrix {
        DensityMatrix::from_trusted(linalg::partial_trace_first(&self.choi, self.dim_in, self.dim_out) / re(self.dim_in as f64))
    }

    pub fn is_real(&self) -> bool {
        linalg::is_real(&self.choi, 1e-14)
    }

    pub fn max_abs_diff(&self, other: &Channel) -> f64 {
        linalg::max_abs_diff(&self.choi, &other.choi)
    }
}

/// Unitary that reorders tensor factors: new position `j` holds old factor `perm[j]`.
pub fn permutation_unitary(dims: &[usize], perm: &[usize]) -> Result<CMat> {
    let k = dims.len();
    let mut seen = vec![false; k];
    for &p in perm {
        if p >= k || seen[p] {
            return Err(Error::dims(format!("{perm:?} is not a permutation of {k} factors")));
        }
        seen[p] = true;
    }
    let total: usize = dims.iter().product();
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let mut u = CMat::zeros(total, total);
    let mut digits = vec![0usize; k];
    for x in 0..total {
        let mut rem = x;
        for f in (0..k).rev() {
            digits[f] = rem % dims[f];
            rem /= dims[f];
        }
        let mut y = 0;
        for j in 0..k {
            y = y * new_dims[j] + digits[perm[j]];
        }
        u[(y, x)] = linalg::ONE;
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hadamard, pauli_z, real_matrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn kraus_apply(ops: &[CMat], rho: &CMat) -> CMat {
        ops.iter().map(|k| k * rho * k.adjoint()).fold(CMat::zeros(ops[0].nrows(), ops[0].nrows()), |a, b| a + b)
    }

    #[test]
    fn identity_choi_is_entangled_projector() {
        let ch = Channel::unitary(&linalg::identity(2)).unwrap();
        assert!(linalg::max_abs_diff(ch.choi(), &linalg::max_entangled_projector(2)) < 1e-15);
        assert!((linalg::trace(ch.choi()).re - 2.0).abs() < 1e-15);
        let vals = linalg::eigvalsh(ch.choi());
        assert_eq!(vals.iter().filter(|v| v.abs() > 1e-12).count(), 1);
    }

    #[test]
    fn classical_cq_choi_is_diagonal() {
        let ch = Channel::cq(&[DensityMatrix::basis(2, 0), DensityMatrix::basis(2, 1)]).unwrap();
        let expected = linalg::from_real_diag(&[1.0, 0.0, 0.0, 1.0]);
        assert!(linalg::max_abs_diff(ch.choi(), &expected) < 1e-15);
    }

    #[test]
    fn phase_flip_mix_choi() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let ops = vec![linalg::identity(2) * re(s), pauli_z() * re(s)];
        let ch = Channel::kraus(2, 2, ops.clone()).unwrap();
        // direct summation Σ_k vec(K)vec(K)†
        let mut oracle = CMat::zeros(4, 4);
        for k in &ops {
            let v = [k[(0, 0)], k[(1, 0)], k[(0, 1)], k[(1, 1)]];
            oracle += linalg::outer(&v);
        }
        assert!(linalg::max_abs_diff(ch.choi(), &oracle) < 1e-15);
        assert!((ch.choi()[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!((ch.choi()[(3, 3)].re - 1.0).abs() < 1e-15);
        assert!(ch.choi()[(0, 3)].norm() < 1e-15);
        let out = ch.apply(&DensityMatrix::plus()).unwrap();
        assert!(linalg::max_abs_diff(out.matrix(), DensityMatrix::maximally_mixed(2).matrix()) < 1e-15);
    }

    #[test]
    fn choi_round_trip_against_kraus_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let ops: Vec<CMat> = {
            // random isometry split into 3 Kraus operators 2x3
            let u = linalg::random_unitary(&mut rng, 6);
            (0..3).map(|k| u.view((2 * k, 0), (2, 3)).into_owned()).collect()
        };
        let ch = Channel::kraus(3, 2, ops.clone()).unwrap();
        for _ in 0..100 {
            let rho = DensityMatrix::random(&mut rng, 3);
            let a = ch.apply(&rho).unwrap();
            let b = kraus_apply(&ops, rho.matrix());
            assert!(linalg::max_abs_diff(a.matrix(), &b) < 1e-9);
        }
    }

    #[test]
    fn rejects_invalid_representations() {
        let bad = vec![linalg::identity(2) * re(0.9)];
        assert!(matches!(Channel::kraus(2, 2, bad), Err(Error::NonTracePreserving { .. })));
        let mut j = linalg::max_entangled_projector(2);
        j[(0, 0)] = re(-0.5);
        j[(0, 3)] = re(0.0);
        j[(3, 0)] = re(0.0);
        assert!(Channel::from_choi(2, 2, j).is_err());
        assert!(matches!(Channel::from_choi(2, 3, linalg::identity(4)), Err(Error::DimensionMismatch(_))));
        assert!(matches!(Channel::unitary(&real_matrix(2, &[1.0, 1.0, 0.0, 1.0])), Err(Error::NonTracePreserving { .. })));
    }

    #[test]
    fn constant_channel_ignores_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sigma = DensityMatrix::random(&mut rng, 2);
        let ch = Channel::constant(3, &sigma);
        for _ in 0..5 {
            let out = ch.apply(&DensityMatrix::random(&mut rng, 3)).unwrap();
            assert!(linalg::max_abs_diff(out.matrix(), sigma.matrix()) < 1e-12);
        }
        assert!(ch.is_constant(1e-12));
        assert!(!Channel::identity(2).is_constant(1e-3));
    }

    #[test]
    fn composition_rules() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = Channel::random(&mut rng, 2, 3);
        let id = Channel::identity(3);
        assert!(Channel::compose(&id, &n).unwrap().max_abs_diff(&n) < 1e-12);
        let sigma = DensityMatrix::random(&mut rng, 2);
        let c = Channel::constant(3, &sigma);
        assert!(Channel::compose(&c, &n).unwrap().max_abs_diff(&Channel::constant(2, &sigma)) < 1e-12);
        let u = linalg::random_unitary(&mut rng, 2);
        let v = linalg::random_unitary(&mut rng, 2);
        let uv = Channel::compose(&Channel::unitary(&u).unwrap(), &Channel::unitary(&v).unwrap()).unwrap();
        assert!(uv.max_abs_diff(&Channel::unitary(&(&u * &v)).unwrap()) < 1e-12);
        assert!(Channel::compose(&n, &n).is_err());
    }

    #[test]
    fn compose_matches_sequential_application_and_is_associative() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = Channel::random(&mut rng, 2, 3);
        let b = Channel::random(&mut rng, 3, 2);
        let c = Channel::random(&mut rng, 2, 2);
        let ba = Channel::compose(&b, &a).unwrap();
        let rho = DensityMatrix::random(&mut rng, 2);
        let seq = b.apply(&a.apply(&rho).unwrap()).unwrap();
        assert!(linalg::max_abs_diff(ba.apply(&rho).unwrap().matrix(), seq.matrix()) < 1e-9);
        let left = Channel::compose(&c, &ba).unwrap();
        let right = Channel::compose(&Channel::compose(&c, &b).unwrap(), &a).unwrap();
        assert!(left.max_abs_diff(&right) < 1e-9);
    }

    #[test]
    fn tensor_rules() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!(Channel::identity(2).tensor(&Channel::identity(2)).max_abs_diff(&Channel::identity(4)) < 1e-15);
        let n = Channel::random(&mut rng, 2, 2);
        let sigma = DensityMatrix::random(&mut rng, 3);
        let c = Channel::constant(2, &sigma);
        let rho = DensityMatrix::random(&mut rng, 2);
        let omega = DensityMatrix::random(&mut rng, 2);
        let out = n.tensor(&c).apply(&rho.tensor(&omega)).unwrap();
        let expected = n.apply(&rho).unwrap().tensor(&sigma);
        assert!(linalg::max_abs_diff(out.matrix(), expected.matrix()) < 1e-12);
        let m = Channel::random(&mut rng, 2, 3);
        let l = n.tensor(&c).tensor(&m);
        let r = n.tensor(&c.tensor(&m));
        assert!(l.max_abs_diff(&r) < 1e-12);
    }

    #[test]
    fn permutations() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sigma = DensityMatrix::random(&mut rng, 2);
        let c = Channel::constant(2, &sigma);
        let id = Channel::identity(2);
        let a = id.tensor(&c);
        let same = a.permute_systems(&[2, 2], &[2, 2], &[0, 1]).unwrap();
        assert!(same.max_abs_diff(&a) < 1e-12);
        let swapped = a.permute_systems(&[2, 2], &[2, 2], &[1, 0]).unwrap();
        assert!(swapped.max_abs_diff(&c.tensor(&id)) < 1e-12);
        let back = swapped.permute_systems(&[2, 2], &[2, 2], &[1, 0]).unwrap();
        assert!(back.max_abs_diff(&a) < 1e-12);
        assert!(a.permute_systems(&[2, 2], &[2, 2], &[0, 0]).is_err());
        assert!(a.permute_systems(&[3, 2], &[2, 2], &[1, 0]).is_err());
    }

    #[test]
    fn cq_detection() {
        let ch = Channel::cq(&[DensityMatrix::plus(), DensityMatrix::basis(2, 0)]).unwrap();
        let states = ch.cq_states(1e-12).unwrap();
        assert!(linalg::max_abs_diff(states[0].matrix(), DensityMatrix::plus().matrix()) < 1e-15);
        assert!(Channel::unitary(&hadamard()).unwrap().cq_states(1e-12).is_none());
    }

    #[test]
    fn random_channels_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for (din, dout) in [(1, 2), (2, 2), (2, 3), (3, 2)] {
            let ch = Channel::random(&mut rng, din, dout);
            assert!(Channel::from_choi(din, dout, ch.choi().clone()).is_ok());
        }
    }
}
