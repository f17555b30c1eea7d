//! Small dense semidefinite programs.
//!
//! A [`ConicProgram`] minimizes a linear objective over real scalar variables
//! subject to Hermitian linear matrix inequalities `C + Σ xᵢ Fᵢ ⪰ 0` and
//! linear equalities. Programs are usually assembled with [`ProgramBuilder`].
//! At solve time every block is lowered to a real symmetric block — blocks
//! whose data are real are kept as they are, the rest go through
//! [`embed_complex`].

mod dense;
mod ipm;
mod model;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

pub use model::{EntryTable, HermVar, LinExpr, MatExpr, ProgramBuilder, Var};

const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    /// A certificate of primal infeasibility was found.
    Infeasible,
    /// A certificate of dual infeasibility was found (objective unbounded below).
    Unbounded,
    MaxIterations,
    NumericalTrouble,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveOptions {
    pub gap_tolerance: f64,
    pub feasibility_tolerance: f64,
    pub max_iterations: usize,
    /// Embed every block as a real `2d × 2d` block, even when its data are real.
    pub force_complex_embedding: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { gap_tolerance: 1e-8, feasibility_tolerance: 1e-8, max_iterations: 200, force_complex_embedding: false }
    }
}

impl SolveOptions {
    /// Defaults with both tolerances set to `tol`.
    pub fn with_tolerance(tol: f64) -> Self {
        Self { gap_tolerance: tol, feasibility_tolerance: tol, ..Self::default() }
    }
}

/// `C + Σᵢ xᵢ Fᵢ ⪰ 0`. Coefficients are stored sparsely per variable with
/// both triangles present.
#[derive(Clone, Debug)]
pub struct AffineBlock {
    pub dim: usize,
    pub constant: CMat,
    pub coefficients: Vec<(usize, Vec<(usize, usize, Complex64)>)>,
}

/// `Σ aᵢ xᵢ = rhs`.
#[derive(Clone, Debug)]
pub struct Equality {
    pub coefficients: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Clone, Debug)]
pub struct ConicProgram {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub objective_constant: f64,
    pub blocks: Vec<AffineBlock>,
    pub equalities: Vec<Equality>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub objective_value: f64,
    /// Objective of the dual iterate; a bound on the optimum up to the
    /// dual residual.
    pub dual_objective: f64,
    pub variable_values: Vec<f64>,
    pub duality_gap: f64,
    pub max_residual: f64,
    pub iterations: usize,
}

impl SolveResult {
    /// Passes optimal results through and turns everything else into an error.
    pub fn into_optimal(self, context: &str) -> Result<SolveResult> {
        match self.status {
            SolveStatus::Optimal => Ok(self),
            SolveStatus::Infeasible => Err(Error::Infeasible(context.to_owned())),
            status => Err(Error::SolverFailure { status, context: context.to_owned() }),
        }
    }
}

/// `[[Re h, −Im h], [Im h, Re h]]`.
pub fn embed_complex(h: &CMat) -> DMatrix<f64> {
    let d = h.nrows();
    DMatrix::from_fn(2 * d, 2 * d, |i, j| {
        let z = h[(i % d, j % d)];
        match (i < d, j < d) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

impl ConicProgram {
    pub fn validate(&self) -> Result<()> {
        if self.num_vars == 0 {
            return Err(Error::InvalidParameter("program has no variables".into()));
        }
        if self.objective.len() != self.num_vars {
            return Err(Error::dims("objective length differs from variable count"));
        }
        for (k, blk) in self.blocks.iter().enumerate() {
            if blk.dim == 0 || blk.constant.shape() != (blk.dim, blk.dim) {
                return Err(Error::dims(format!("block {k} has inconsistent dimension")));
            }
            let deviation = linalg::hermitian_deviation(&blk.constant);
            if deviation > HERMITIAN_TOL {
                return Err(Error::NotHermitian { deviation });
            }
            for (v, ents) in &blk.coefficients {
                if *v >= self.num_vars {
                    return Err(Error::dims(format!("block {k} references variable {v}")));
                }
                let mut map = BTreeMap::new();
                for &(r, c, z) in ents {
                    if r >= blk.dim || c >= blk.dim {
                        return Err(Error::dims(format!("block {k} entry ({r},{c}) out of range")));
                    }
                    *map.entry((r, c)).or_insert(linalg::ZERO) += z;
                }
                for (&(r, c), &z) in &map {
                    let mirror = map.get(&(c, r)).copied().unwrap_or(linalg::ZERO);
                    let deviation = (z - mirror.conj()).norm();
                    if deviation > HERMITIAN_TOL {
                        return Err(Error::NotHermitian { deviation });
                    }
                }
            }
        }
        for eq in &self.equalities {
            if eq.coefficients.iter().any(|&(v, _)| v >= self.num_vars) {
                return Err(Error::dims("equality references an unknown variable"));
            }
        }
        Ok(())
    }

    fn lower(&self, force_embedding: bool) -> Result<ipm::RealProblem> {
        let n = self.num_vars;
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for blk in &self.blocks {
            let real = !force_embedding
                && linalg::is_real(&blk.constant, 0.0)
                && blk.coefficients.iter().all(|(_, e)| e.iter().all(|t| t.2.im == 0.0));
            let d = blk.dim;
            let (dim, h) = if real { (d, blk.constant.map(|z| z.re)) } else { (2 * d, embed_complex(&blk.constant)) };
            let mut vars = Vec::new();
            let mut entries = Vec::new();
            for (v, ents) in &blk.coefficients {
                let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
                for &(r, c, z) in ents {
                    if real {
                        *merged.entry((r, c)).or_default() -= z.re;
                    } else {
                        *merged.entry((r, c)).or_default() -= z.re;
                        *merged.entry((r + d, c + d)).or_default() -= z.re;
                        *merged.entry((r + d, c)).or_default() -= z.im;
                        *merged.entry((r, c + d)).or_default() += z.im;
                    }
                }
                let list: Vec<_> = merged.into_iter().filter(|(_, g)| *g != 0.0).map(|((r, c), g)| (r, c, g)).collect();
                if !list.is_empty() {
                    vars.push(*v);
                    entries.push(list);
                }
            }
            blocks.push(ipm::RealBlock { dim, h, vars, entries });
        }
        let (a_rows, b) = independent_equalities(n, &self.equalities)?;
        Ok(ipm::RealProblem { n, c: DVector::from_column_slice(&self.objective), blocks, a_rows, b })
    }

    /// Largest violation of any constraint at `x`: the most negative block
    /// eigenvalue (clamped at zero) or the largest equality residual.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for blk in &self.blocks {
            let f = self.block_value(blk, x);
            worst = worst.max(-linalg::min_eigenvalue(&f));
        }
        for eq in &self.equalities {
            let lhs: f64 = eq.coefficients.iter().map(|&(v, a)| a * x[v]).sum();
            worst = worst.max((lhs - eq.rhs).abs());
        }
        worst
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective_constant + self.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    fn block_value(&self, blk: &AffineBlock, x: &[f64]) -> CMat {
        let mut f = blk.constant.clone();
        for (v, ents) in &blk.coefficients {
            for &(r, c, z) in ents {
                f[(r, c)] += z * x[*v];
            }
        }
        f
    }

    /// Sparse triplet listing, one record per line:
    /// `var n`, `obj i c`, `objconst c`, `block k dim`, `const k r c re im`,
    /// `coef k i r c re im`, `eq j i a`, `rhs j b`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "var {}", self.num_vars);
        for (i, c) in self.objective.iter().enumerate() {
            if *c != 0.0 {
                let _ = writeln!(out, "obj {i} {c:e}");
            }
        }
        if self.objective_constant != 0.0 {
            let _ = writeln!(out, "objconst {:e}", self.objective_constant);
        }
        for (k, blk) in self.blocks.iter().enumerate() {
            let _ = writeln!(out, "block {k} {}", blk.dim);
            for r in 0..blk.dim {
                for c in 0..blk.dim {
                    let z = blk.constant[(r, c)];
                    if z != linalg::ZERO {
                        let _ = writeln!(out, "const {k} {r} {c} {:e} {:e}", z.re, z.im);
                    }
                }
            }
            for (v, ents) in &blk.coefficients {
                for &(r, c, z) in ents {
                    let _ = writeln!(out, "coef {k} {v} {r} {c} {:e} {:e}", z.re, z.im);
                }
            }
        }
        for (j, eq) in self.equalities.iter().enumerate() {
            for &(v, a) in &eq.coefficients {
                let _ = writeln!(out, "eq {j} {v} {a:e}");
            }
            let _ = writeln!(out, "rhs {j} {:e}", eq.rhs);
        }
        out
    }
}

/// Drops linearly dependent equality rows (greedy Gram–Schmidt in the given
/// order) and checks that the dropped rows are consistent with the rest.
fn independent_equalities(n: usize, eqs: &[Equality]) -> Result<(Vec<Vec<(usize, f64)>>, DVector<f64>)> {
    let dense_row = |eq: &Equality| {
        let mut row = DVector::zeros(n);
        for &(v, a) in &eq.coefficients {
            row[v] += a;
        }
        row
    };
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut kept = Vec::new();
    for (k, eq) in eqs.iter().enumerate() {
        let row = dense_row(eq);
        let norm = row.norm();
        if norm == 0.0 {
            continue;
        }
        let mut r = row.clone();
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dot(&r);
                r.axpy(-proj, q, 1.0);
            }
        }
        let rn = r.norm();
        if rn > 1e-9 * norm {
            basis.push(r / rn);
            kept.push(k);
        }
    }
    let rows: Vec<Vec<(usize, f64)>> = kept
        .iter()
        .map(|&k| {
            let row = dense_row(&eqs[k]);
            row.iter().enumerate().filter(|(_, a)| **a != 0.0).map(|(i, a)| (i, *a)).collect()
        })
        .collect();
    let b = DVector::from_iterator(kept.len(), kept.iter().map(|&k| eqs[k].rhs));
    // Minimum-norm solution of the kept system, used to test the dropped rows.
    let a = DMatrix::from_fn(kept.len(), n, |i, j| rows[i].iter().find(|t| t.0 == j).map_or(0.0, |t| t.1));
    let gram = &a * a.transpose();
    let x0 = match gram.cholesky() {
        Some(ch) => a.transpose() * ch.solve(&b),
        None if kept.is_empty() => DVector::zeros(n),
        None => return Err(Error::SolverFailure { status: SolveStatus::NumericalTrouble, context: "equality preprocessing".into() }),
    };
    for eq in eqs {
        let lhs = dense_row(eq).dot(&x0);
        if (lhs - eq.rhs).abs() > 1e-8 * (1.0 + eq.rhs.abs()) {
            return Err(Error::Infeasible("linear equalities are inconsistent".into()));
        }
    }
    Ok((rows, b))
}

/// Solves `program`. Validation problems are returned as errors; solver
/// outcomes (including infeasibility) are reported through the status.
pub fn solve(program: &ConicProgram, options: &SolveOptions) -> Result<SolveResult> {
    program.validate()?;
    let real = match program.lower(options.force_complex_embedding) {
        Ok(p) => p,
        Err(Error::Infeasible(_)) => {
            return Ok(SolveResult {
                status: SolveStatus::Infeasible,
                objective_value: f64::INFINITY,
                dual_objective: f64::INFINITY,
                variable_values: vec![0.0; program.num_vars],
                duality_gap: f64::NAN,
                max_residual: f64::INFINITY,
                iterations: 0,
            })
        }
        Err(e) => return Err(e),
    };
    let raw = ipm::solve(&real, options);
    let x: Vec<f64> = raw.x.iter().copied().collect();
    let max_residual = if x.iter().all(|v| v.is_finite()) { program.max_violation(&x) } else { f64::INFINITY };
    let objective_value = match raw.status {
        SolveStatus::Infeasible => f64::INFINITY,
        SolveStatus::Unbounded => f64::NEG_INFINITY,
        _ => program.objective_at(&x),
    };
    Ok(SolveResult {
        status: raw.status,
        objective_value,
        dual_objective: raw.dual_objective + program.objective_constant,
        variable_values: x,
        duality_gap: raw.relative_gap,
        max_residual,
        iterations: raw.iterations,
    })
}
