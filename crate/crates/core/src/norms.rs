//! Diamond norm and diamond distances, computed by semidefinite programs.
//!
//! Distances are half diamond norms, `½‖a − b‖_⋄ ∈ [0, 1]`; `diamond_norm`
//! returns the full norm.

use serde::{Deserialize, Serialize};

use crate::channel::{Channel, HermitianMatrix};
use crate::conic::{self, LinExpr, MatExpr, ProgramBuilder, SolveOptions};
use crate::error::{Error, Result};
use crate::free_sets::{self, FreeSetSpec};
use crate::linalg::{self, CMat};
use crate::report::SolveSummary;

/// A Hermiticity-preserving linear map, given by its Choi matrix. Neither
/// positivity nor trace preservation is required.
#[derive(Clone, Debug)]
pub struct HermitianPreservingMap {
    dim_in: usize,
    dim_out: usize,
    choi: HermitianMatrix,
}

impl HermitianPreservingMap {
    pub fn new(dim_in: usize, dim_out: usize, choi: CMat) -> Result<Self> {
        if choi.nrows() != dim_in * dim_out || !choi.is_square() {
            return Err(Error::dims(format!("Choi matrix is {}x{}, expected {n}x{n}", choi.nrows(), choi.ncols(), n = dim_in * dim_out)));
        }
        Ok(Self { dim_in, dim_out, choi: HermitianMatrix::new(choi)? })
    }

    /// `a − b`.
    pub fn difference(a: &Channel, b: &Channel) -> Result<Self> {
        check_same_dims(a, b)?;
        Self::new(a.dim_in(), a.dim_out(), a.choi() - b.choi())
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn choi(&self) -> &CMat {
        self.choi.matrix()
    }

    fn annihilates_trace(&self) -> bool {
        let marginal = linalg::partial_trace_second(self.choi(), self.dim_in, self.dim_out);
        marginal.iter().all(|z| z.norm() <= 1e-12 * (1.0 + self.choi().camax()))
    }
}

fn check_same_dims(a: &Channel, b: &Channel) -> Result<()> {
    if a.dim_in() != b.dim_in() || a.dim_out() != b.dim_out() {
        return Err(Error::dims(format!("channels are {}→{} and {}→{}", a.dim_in(), a.dim_out(), b.dim_in(), b.dim_out())));
    }
    Ok(())
}

/// `tI − Tr_out Z ⪰ 0`
fn epigraph(b: &mut ProgramBuilder, z: &MatExpr, din: usize, dout: usize) -> conic::Var {
    let t = b.scalar();
    b.psd(MatExpr::scalar_identity(t, din, 1.0).sub(&z.partial_trace_second(din, dout)));
    t
}

/// Half norm of a trace-annihilating map:
/// `min ‖Tr_out Z‖_∞` over `Z ⪰ 0`, `Z ⪰ J`.
fn half_norm_trace_annihilating(map: &HermitianPreservingMap, options: &SolveOptions) -> Result<(f64, SolveSummary)> {
    let (din, dout) = (map.dim_in, map.dim_out);
    let mut b = ProgramBuilder::new();
    let z = b.hermitian(din * dout, linalg::is_real(map.choi(), 0.0)).expr();
    b.psd(z.clone());
    b.psd(z.add_constant(&-map.choi()));
    let t = epigraph(&mut b, &z, din, dout);
    b.minimize(LinExpr::from(t));
    let r = conic::solve(&b.build(), options)?.into_optimal("diamond norm")?;
    Ok((r.objective_value.max(0.0), SolveSummary::from(&r)))
}

/// General Hermiticity-preserving maps:
/// `min ½(‖Tr_out Y₀‖_∞ + ‖Tr_out Y₁‖_∞)` over `[[Y₀, −J], [−J, Y₁]] ⪰ 0`.
fn norm_general(map: &HermitianPreservingMap, options: &SolveOptions) -> Result<(f64, SolveSummary)> {
    let (din, dout) = (map.dim_in, map.dim_out);
    let n = din * dout;
    let real = linalg::is_real(map.choi(), 0.0);
    let mut b = ProgramBuilder::new();
    let y0 = b.hermitian(n, real).expr();
    let y1 = b.hermitian(n, real).expr();
    let mut off = CMat::zeros(2 * n, 2 * n);
    off.view_mut((0, n), (n, n)).copy_from(&-map.choi());
    off.view_mut((n, 0), (n, n)).copy_from(&-map.choi());
    b.psd(y0.block_diag(&y1).add_constant(&off));
    let t0 = epigraph(&mut b, &y0, din, dout);
    let t1 = epigraph(&mut b, &y1, din, dout);
    b.minimize(LinExpr::from(t0).add(&LinExpr::from(t1)).scale(0.5));
    let r = conic::solve(&b.build(), options)?.into_optimal("diamond norm")?;
    Ok((r.objective_value.max(0.0), SolveSummary::from(&r)))
}

/// `‖map‖_⋄`.
pub fn diamond_norm(map: &HermitianPreservingMap) -> Result<f64> {
    diamond_norm_with(map, &SolveOptions::default())
}

pub fn diamond_norm_with(map: &HermitianPreservingMap, options: &SolveOptions) -> Result<f64> {
    if map.annihilates_trace() {
        Ok(2.0 * half_norm_trace_annihilating(map, options)?.0)
    } else {
        Ok(norm_general(map, options)?.0)
    }
}

/// `½‖a − b‖_⋄`.
pub fn diamond_distance(a: &Channel, b: &Channel) -> Result<f64> {
    diamond_distance_with(a, b, &SolveOptions::default())
}

pub fn diamond_distance_with(a: &Channel, b: &Channel, options: &SolveOptions) -> Result<f64> {
    Ok(diamond_distance_report(a, b, options)?.0)
}

/// Distance together with the solver summary.
pub fn diamond_distance_report(a: &Channel, b: &Channel, options: &SolveOptions) -> Result<(f64, SolveSummary)> {
    let diff = HermitianPreservingMap::difference(a, b)?;
    let (v, s) = half_norm_trace_annihilating(&diff, options)?;
    Ok((v.min(1.0), s))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistanceToFree {
    /// `min_L ½‖n − L‖_⋄` over free channels `L`.
    pub distance: f64,
    #[serde(skip)]
    pub nearest: Option<Channel>,
    pub solve: SolveSummary,
}

/// Distance from `n` to the free channels of `spec`, as a single SDP over the
/// free channel and the diamond epigraph.
pub fn diamond_distance_to_free(n: &Channel, spec: &FreeSetSpec) -> Result<DistanceToFree> {
    diamond_distance_to_free_with(n, spec, &SolveOptions::default())
}

pub fn diamond_distance_to_free_with(n: &Channel, spec: &FreeSetSpec, options: &SolveOptions) -> Result<DistanceToFree> {
    if n.dim_in() != spec.dim_in || n.dim_out() != spec.dim_out {
        return Err(Error::dims(format!("channel is {}→{}, cone is {}→{}", n.dim_in(), n.dim_out(), spec.dim_in, spec.dim_out)));
    }
    let cone = free_sets::compile(spec, true)?;
    let (din, dout) = (n.dim_in(), n.dim_out());
    let real = n.is_real() && cone.is_real();
    let mut b = ProgramBuilder::new();
    let jl = b.hermitian(din * dout, real);
    cone.impose(&mut b, &jl.expr(), &LinExpr::constant(1.0));
    let z = b.hermitian(din * dout, real).expr();
    b.psd(z.clone());
    // Z − (J_n − J_L) ⪰ 0
    b.psd(z.add(&jl.expr()).add_constant(&-n.choi()));
    let t = epigraph(&mut b, &z, din, dout);
    b.minimize(LinExpr::from(t));
    let r = conic::solve(&b.build(), options)?.into_optimal(&format!("distance to the {} cone", spec.name()))?;
    let nearest = Channel::from_choi_unchecked(din, dout, linalg::hermitize(&jl.value(&r.variable_values)))?
        .with_label(format!("nearest {} channel", spec.name()));
    Ok(DistanceToFree { distance: r.objective_value.clamp(0.0, 1.0), nearest: Some(nearest), solve: SolveSummary::from(&r) })
}
