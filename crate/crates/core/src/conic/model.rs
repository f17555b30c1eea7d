//! Affine expression layer used to assemble programs.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;

use super::{AffineBlock, ConicProgram, Equality};
use crate::linalg::{self, CMat, ONE, ZERO};

/// A real scalar variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }

    pub fn value(self, x: &[f64]) -> f64 {
        x[self.0]
    }
}

/// `constant + Σ coefᵢ xᵢ` over real variables.
#[derive(Clone, Debug, Default)]
pub struct LinExpr {
    pub constant: f64,
    pub terms: Vec<(usize, f64)>,
}

impl From<Var> for LinExpr {
    fn from(v: Var) -> Self {
        LinExpr { constant: 0.0, terms: vec![(v.0, 1.0)] }
    }
}

impl LinExpr {
    pub fn constant(c: f64) -> Self {
        LinExpr { constant: c, terms: Vec::new() }
    }

    pub fn add(mut self, other: &LinExpr) -> Self {
        self.constant += other.constant;
        self.terms.extend_from_slice(&other.terms);
        self
    }

    pub fn sub(self, other: &LinExpr) -> Self {
        self.add(&other.clone().scale(-1.0))
    }

    pub fn scale(mut self, a: f64) -> Self {
        self.constant *= a;
        for t in &mut self.terms {
            t.1 *= a;
        }
        self
    }

    fn merged(&self) -> Vec<(usize, f64)> {
        let mut map: BTreeMap<usize, f64> = BTreeMap::new();
        for &(v, a) in &self.terms {
            *map.entry(v).or_default() += a;
        }
        map.into_iter().filter(|(_, a)| *a != 0.0).collect()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(v, a)| a * x[v]).sum::<f64>()
    }
}

/// A square complex matrix that is affine in the real variables:
/// `constant + Σ x_v · coef · |r⟩⟨c|` over the listed terms.
#[derive(Clone, Debug)]
pub struct MatExpr {
    dim: usize,
    constant: CMat,
    terms: Vec<(usize, usize, usize, Complex64)>,
}

impl MatExpr {
    pub fn zero(dim: usize) -> Self {
        MatExpr { dim, constant: CMat::zeros(dim, dim), terms: Vec::new() }
    }

    pub fn constant(m: CMat) -> Self {
        assert!(m.is_square());
        MatExpr { dim: m.nrows(), constant: m, terms: Vec::new() }
    }

    /// `coef · v · I_dim`.
    pub fn scalar_identity(v: Var, dim: usize, coef: f64) -> Self {
        MatExpr { dim, constant: CMat::zeros(dim, dim), terms: (0..dim).map(|i| (v.0, i, i, linalg::re(coef))).collect() }
    }

    /// `v · m` for a fixed matrix `m`.
    pub fn scalar_times(v: Var, m: &CMat) -> Self {
        let mut terms = Vec::new();
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                if m[(r, c)] != ZERO {
                    terms.push((v.0, r, c, m[(r, c)]));
                }
            }
        }
        MatExpr { dim: m.nrows(), constant: CMat::zeros(m.nrows(), m.nrows()), terms }
    }

    /// `e · I_dim` for a scalar affine expression `e`.
    pub fn lin_identity(e: &LinExpr, dim: usize) -> Self {
        let mut terms = Vec::with_capacity(dim * e.terms.len());
        for &(v, a) in &e.terms {
            terms.extend((0..dim).map(|i| (v, i, i, linalg::re(a))));
        }
        MatExpr { dim, constant: linalg::identity(dim) * linalg::re(e.constant), terms }
    }

    /// Entry lookup table, for reading many entries without rescanning the terms.
    pub fn entry_table(&self) -> EntryTable {
        let mut map: HashMap<(usize, usize), Vec<(usize, Complex64)>> = HashMap::new();
        for &(v, r, c, z) in &self.terms {
            map.entry((r, c)).or_default().push((v, z));
        }
        EntryTable { constant: self.constant.clone(), map }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn add(&self, other: &MatExpr) -> Self {
        assert_eq!(self.dim, other.dim, "expression dimensions differ");
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        MatExpr { dim: self.dim, constant: &self.constant + &other.constant, terms }
    }

    pub fn sub(&self, other: &MatExpr) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn add_constant(&self, m: &CMat) -> Self {
        MatExpr { dim: self.dim, constant: &self.constant + m, terms: self.terms.clone() }
    }

    pub fn scale(&self, a: f64) -> Self {
        MatExpr {
            dim: self.dim,
            constant: &self.constant * linalg::re(a),
            terms: self.terms.iter().map(|&(v, r, c, z)| (v, r, c, z * a)).collect(),
        }
    }

    /// Applies the linear map that sends `|r⟩⟨c|` to `Σ w |r'⟩⟨c'|` over `f(r, c)`.
    pub fn map_units(&self, out_dim: usize, f: impl Fn(usize, usize) -> Vec<(usize, usize, Complex64)>) -> Self {
        let mut constant = CMat::zeros(out_dim, out_dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                let z = self.constant[(r, c)];
                if z != ZERO {
                    for (r2, c2, w) in f(r, c) {
                        constant[(r2, c2)] += z * w;
                    }
                }
            }
        }
        let mut terms = Vec::with_capacity(self.terms.len());
        for &(v, r, c, z) in &self.terms {
            for (r2, c2, w) in f(r, c) {
                terms.push((v, r2, c2, z * w));
            }
        }
        MatExpr { dim: out_dim, constant, terms }
    }

    /// Traces out the second factor of `C^d1 ⊗ C^d2`.
    pub fn partial_trace_second(&self, d1: usize, d2: usize) -> Self {
        assert_eq!(self.dim, d1 * d2);
        self.map_units(d1, |r, c| if r % d2 == c % d2 { vec![(r / d2, c / d2, ONE)] } else { Vec::new() })
    }

    /// Traces out the first factor of `C^d1 ⊗ C^d2`.
    pub fn partial_trace_first(&self, d1: usize, d2: usize) -> Self {
        assert_eq!(self.dim, d1 * d2);
        self.map_units(d2, |r, c| if r / d2 == c / d2 { vec![(r % d2, c % d2, ONE)] } else { Vec::new() })
    }

    /// `I_d ⊗ self`.
    pub fn identity_kron(&self, d: usize) -> Self {
        let n = self.dim;
        self.map_units(d * n, |r, c| (0..d).map(|k| (k * n + r, k * n + c, ONE)).collect())
    }

    /// `self ⊗ I_d`.
    pub fn kron_identity(&self, d: usize) -> Self {
        self.map_units(self.dim * d, |r, c| (0..d).map(|k| (r * d + k, c * d + k, ONE)).collect())
    }

    /// `[[self, 0], [0, other]]`.
    pub fn block_diag(&self, other: &MatExpr) -> Self {
        let n = self.dim;
        let a = self.map_units(n + other.dim, |r, c| vec![(r, c, ONE)]);
        let b = other.map_units(n + other.dim, |r, c| vec![(n + r, n + c, ONE)]);
        a.add(&b)
    }

    /// `Re tr(a · self)`.
    pub fn trace_with(&self, a: &CMat) -> LinExpr {
        let constant = linalg::trace_product_re(a, &self.constant);
        let terms = self.terms.iter().map(|&(v, r, c, z)| (v, (a[(c, r)] * z).re)).filter(|t| t.1 != 0.0).collect();
        LinExpr { constant, terms }
    }

    pub fn trace(&self) -> LinExpr {
        self.trace_with(&linalg::identity(self.dim))
    }

    /// Real and imaginary parts of entry `(r, c)`.
    pub fn entry(&self, r: usize, c: usize) -> (LinExpr, LinExpr) {
        let z = self.constant[(r, c)];
        let mut re = LinExpr::constant(z.re);
        let mut im = LinExpr::constant(z.im);
        for &(v, rr, cc, w) in &self.terms {
            if rr == r && cc == c {
                re.terms.push((v, w.re));
                im.terms.push((v, w.im));
            }
        }
        (re, im)
    }

    pub fn value(&self, x: &[f64]) -> CMat {
        let mut m = self.constant.clone();
        for &(v, r, c, z) in &self.terms {
            m[(r, c)] += z * x[v];
        }
        m
    }

    /// Terms merged by variable, dropping exact zeros.
    fn coefficient_lists(&self) -> Vec<(usize, Vec<(usize, usize, Complex64)>)> {
        let mut map: BTreeMap<(usize, usize, usize), Complex64> = BTreeMap::new();
        for &(v, r, c, z) in &self.terms {
            *map.entry((v, r, c)).or_insert(ZERO) += z;
        }
        let mut out: Vec<(usize, Vec<(usize, usize, Complex64)>)> = Vec::new();
        for ((v, r, c), z) in map {
            if z == ZERO {
                continue;
            }
            match out.last_mut() {
                Some((last, list)) if *last == v => list.push((r, c, z)),
                _ => out.push((v, vec![(r, c, z)])),
            }
        }
        out
    }
}

/// Per-entry view of a [`MatExpr`].
pub struct EntryTable {
    constant: CMat,
    map: HashMap<(usize, usize), Vec<(usize, Complex64)>>,
}

impl EntryTable {
    /// Real and imaginary part of the constant at `(r, c)`.
    pub fn constant(&self, r: usize, c: usize) -> (f64, f64) {
        let z = self.constant[(r, c)];
        (z.re, z.im)
    }

    /// `(variable, coefficient)` pairs at `(r, c)`.
    pub fn terms(&self, r: usize, c: usize) -> &[(usize, Complex64)] {
        self.map.get(&(r, c)).map_or(&[], |v| v.as_slice())
    }
}

/// A Hermitian (or real symmetric) matrix of real variables.
#[derive(Clone, Debug)]
pub struct HermVar {
    dim: usize,
    real: bool,
    /// Variable of `Re X_rc` for `r ≤ c`, row-major over the upper triangle.
    re: Vec<usize>,
    /// Variable of `Im X_rc` for `r < c` (empty when `real`).
    im: Vec<usize>,
}

impl HermVar {
    fn upper_index(dim: usize, r: usize, c: usize) -> usize {
        r * dim - r * (r + 1) / 2 + c
    }

    fn strict_index(dim: usize, r: usize, c: usize) -> usize {
        Self::upper_index(dim, r, c) - (r + 1)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn expr(&self) -> MatExpr {
        let d = self.dim;
        let mut terms = Vec::with_capacity(d * d * if self.real { 1 } else { 2 });
        for r in 0..d {
            terms.push((self.re[Self::upper_index(d, r, r)], r, r, ONE));
            for c in r + 1..d {
                let v = self.re[Self::upper_index(d, r, c)];
                terms.push((v, r, c, ONE));
                terms.push((v, c, r, ONE));
                if !self.real {
                    let w = self.im[Self::strict_index(d, r, c)];
                    terms.push((w, r, c, Complex64::new(0.0, 1.0)));
                    terms.push((w, c, r, Complex64::new(0.0, -1.0)));
                }
            }
        }
        MatExpr { dim: d, constant: CMat::zeros(d, d), terms }
    }

    pub fn value(&self, x: &[f64]) -> CMat {
        let d = self.dim;
        let mut m = CMat::zeros(d, d);
        for r in 0..d {
            for c in r..d {
                let re = x[self.re[Self::upper_index(d, r, c)]];
                let im = if r < c && !self.real { x[self.im[Self::strict_index(d, r, c)]] } else { 0.0 };
                m[(r, c)] = Complex64::new(re, im);
                m[(c, r)] = Complex64::new(re, -im);
            }
        }
        m
    }
}

#[derive(Clone, Debug, Default)]
pub struct ProgramBuilder {
    num_vars: usize,
    objective: LinExpr,
    blocks: Vec<AffineBlock>,
    equalities: Vec<Equality>,
}

impl ProgramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn scalar(&mut self) -> Var {
        self.num_vars += 1;
        Var(self.num_vars - 1)
    }

    /// A `dim × dim` Hermitian matrix variable; `real` restricts it to real
    /// symmetric matrices.
    pub fn hermitian(&mut self, dim: usize, real: bool) -> HermVar {
        let upper = dim * (dim + 1) / 2;
        let re: Vec<usize> = (0..upper).map(|_| self.scalar().0).collect();
        let im: Vec<usize> = if real { Vec::new() } else { (0..upper - dim).map(|_| self.scalar().0).collect() };
        HermVar { dim, real, re, im }
    }

    /// Requires `e ⪰ 0`.
    pub fn psd(&mut self, e: MatExpr) {
        let coefficients = e.coefficient_lists();
        self.blocks.push(AffineBlock { dim: e.dim, constant: e.constant, coefficients });
    }

    /// Requires `e ≥ 0` for a scalar expression.
    pub fn nonneg(&mut self, e: &LinExpr) {
        let mut m = MatExpr::constant(linalg::from_real_diag(&[e.constant]));
        m.terms = e.terms.iter().map(|&(v, a)| (v, 0, 0, linalg::re(a))).collect();
        self.psd(m);
    }

    /// Requires `e = rhs`.
    pub fn eq(&mut self, e: LinExpr, rhs: f64) {
        self.equalities.push(Equality { coefficients: e.merged(), rhs: rhs - e.constant });
    }

    /// Requires the Hermitian expression `e` to vanish: real parts of the
    /// upper triangle and imaginary parts of the strict upper triangle.
    pub fn eq_zero_matrix(&mut self, e: &MatExpr) {
        let d = e.dim;
        let mut re: BTreeMap<(usize, usize), Vec<(usize, f64)>> = BTreeMap::new();
        let mut im: BTreeMap<(usize, usize), Vec<(usize, f64)>> = BTreeMap::new();
        for &(v, r, c, z) in &e.terms {
            if r <= c {
                re.entry((r, c)).or_default().push((v, z.re));
                if r < c {
                    im.entry((r, c)).or_default().push((v, z.im));
                }
            }
        }
        for r in 0..d {
            for c in r..d {
                let z = e.constant[(r, c)];
                let parts = [(re.remove(&(r, c)), z.re), (if r < c { im.remove(&(r, c)) } else { None }, z.im)];
                for (k, (terms, cst)) in parts.into_iter().enumerate() {
                    if k == 1 && r == c {
                        continue;
                    }
                    let terms = terms.unwrap_or_default();
                    let lin = LinExpr { constant: cst, terms };
                    let merged = lin.merged();
                    if merged.is_empty() && cst.abs() <= 1e-14 {
                        continue;
                    }
                    self.equalities.push(Equality { coefficients: merged, rhs: -cst });
                }
            }
        }
    }

    pub fn minimize(&mut self, e: LinExpr) {
        self.objective = e;
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn build(self) -> ConicProgram {
        let mut objective = vec![0.0; self.num_vars];
        for (v, a) in self.objective.merged() {
            objective[v] += a;
        }
        ConicProgram {
            num_vars: self.num_vars,
            objective,
            objective_constant: self.objective.constant,
            blocks: self.blocks,
            equalities: self.equalities,
        }
    }
}
