//! Primal-dual interior-point method on the homogeneous self-dual embedding.
//!
//! Solves
//! ```text
//!   minimize cᵀx   subject to   G x + s = h,  A x = b,  s ∈ S₊^{d₁} × … × S₊^{d_k}
//! ```
//! together with its dual `maximize −hᵀz − bᵀy  s.t.  Gᵀz + Aᵀy + c = 0, z ⪰ 0`,
//! using Nesterov–Todd scaling and a Mehrotra predictor-corrector. Each
//! iteration solves the reduced KKT system through the Schur complement
//! `H = Gᵀ(WᵀW)⁻¹G`, followed by a second Cholesky on `A H⁻¹ Aᵀ`.

use nalgebra::{DMatrix, DVector};

use super::dense::{backward_substitute, cholesky_in_place, cholesky_solve, forward_substitute};
use super::{SolveOptions, SolveStatus};

type Sym = DMatrix<f64>;

/// One positive-semidefinite block of the real problem. `entries[t]` lists
/// every nonzero `(row, col, value)` of the coefficient of `vars[t]` in `G`,
/// both triangles included.
#[derive(Clone, Debug)]
pub(crate) struct RealBlock {
    pub dim: usize,
    pub h: Sym,
    pub vars: Vec<usize>,
    pub entries: Vec<Vec<(usize, usize, f64)>>,
}

#[derive(Clone, Debug)]
pub(crate) struct RealProblem {
    pub n: usize,
    pub c: DVector<f64>,
    pub blocks: Vec<RealBlock>,
    pub a_rows: Vec<Vec<(usize, f64)>>,
    pub b: DVector<f64>,
}

#[derive(Clone, Debug)]
pub(crate) struct RawSolution {
    pub status: SolveStatus,
    pub x: DVector<f64>,
    pub dual_objective: f64,
    pub relative_gap: f64,
    pub iterations: usize,
}

impl RealProblem {
    fn m(&self) -> usize {
        self.a_rows.len()
    }

    fn degree(&self) -> usize {
        self.blocks.iter().map(|b| b.dim).sum()
    }

    fn g_mul(&self, x: &DVector<f64>) -> Vec<Sym> {
        self.blocks
            .iter()
            .map(|blk| {
                let mut m = Sym::zeros(blk.dim, blk.dim);
                for (&v, ents) in blk.vars.iter().zip(&blk.entries) {
                    let xv = x[v];
                    if xv != 0.0 {
                        for &(r, c, g) in ents {
                            m[(r, c)] += g * xv;
                        }
                    }
                }
                m
            })
            .collect()
    }

    fn gt_mul(&self, y: &[Sym]) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        for (blk, ym) in self.blocks.iter().zip(y) {
            for (&v, ents) in blk.vars.iter().zip(&blk.entries) {
                out[v] += ents.iter().map(|&(r, c, g)| g * ym[(r, c)]).sum::<f64>();
            }
        }
        out
    }

    fn a_mul(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.m(), self.a_rows.iter().map(|row| row.iter().map(|&(j, a)| a * x[j]).sum()))
    }

    fn at_mul(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        for (row, &yi) in self.a_rows.iter().zip(y.iter()) {
            for &(j, a) in row {
                out[j] += a * yi;
            }
        }
        out
    }
}

fn inner(a: &[Sym], b: &[Sym]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn fro_norm(a: &[Sym]) -> f64 {
    inner(a, a).sqrt()
}

fn axpy(y: &mut [Sym], alpha: f64, x: &[Sym]) {
    for (a, b) in y.iter_mut().zip(x) {
        *a += b * alpha;
    }
}

fn symmetrize(m: &Sym) -> Sym {
    (m + m.transpose()) * 0.5
}

fn min_eig(m: &Sym) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)];
    }
    symmetrize(m).symmetric_eigenvalues().min()
}

/// Nesterov–Todd scaling of one block: `W(z) = Rᵀ z R`, `W⁻ᵀ(s) = R⁻¹ s R⁻ᵀ`,
/// both equal to `diag(λ)` at the current point.
struct BlockScaling {
    r: Sym,
    /// `R⁻¹`.
    rinv: Sym,
    lambda: DVector<f64>,
    /// `(R Rᵀ)⁻¹`, so that `(WᵀW)⁻¹(Y) = v Y v`.
    v: Sym,
}

impl BlockScaling {
    fn identity(d: usize) -> Self {
        Self { r: Sym::identity(d, d), rinv: Sym::identity(d, d), lambda: DVector::from_element(d, 1.0), v: Sym::identity(d, d) }
    }

    fn nesterov_todd(s: &Sym, z: &Sym) -> Option<Self> {
        let ls = symmetrize(s).cholesky()?.unpack();
        let lz = symmetrize(z).cholesky()?.unpack();
        let svd = (lz.transpose() * &ls).svd(false, true);
        let vt = svd.v_t?;
        let lambda = svd.singular_values;
        if lambda.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return None;
        }
        let d = s.nrows();
        let mut ls_inv = Sym::identity(d, d);
        if !ls.solve_lower_triangular_mut(&mut ls_inv) {
            return None;
        }
        let mut r = &ls * vt.transpose();
        let mut rinv = &vt * ls_inv;
        for k in 0..d {
            let sq = lambda[k].sqrt();
            r.column_mut(k).scale_mut(1.0 / sq);
            rinv.row_mut(k).scale_mut(sq);
        }
        let v = rinv.transpose() * &rinv;
        Some(Self { r, rinv, lambda, v })
    }

    /// `W(z)`.
    fn w(&self, z: &Sym) -> Sym {
        self.r.transpose() * z * &self.r
    }

    /// `W⁻ᵀ(s)`.
    fn wt_inv(&self, s: &Sym) -> Sym {
        &self.rinv * s * self.rinv.transpose()
    }

    /// `Wᵀ(y)`.
    fn wt(&self, y: &Sym) -> Sym {
        &self.r * y * self.r.transpose()
    }

    fn wtw_inv(&self, y: &Sym) -> Sym {
        &self.v * y * &self.v
    }

    /// Largest step `α` with `diag(λ) + α d ⪰ 0` (infinite if unbounded).
    fn max_step(&self, d: &Sym) -> f64 {
        let n = self.lambda.len();
        let m = Sym::from_fn(n, n, |i, j| d[(i, j)] / (self.lambda[i] * self.lambda[j]).sqrt());
        let e = min_eig(&m);
        if e < 0.0 {
            -1.0 / e
        } else {
            f64::INFINITY
        }
    }
}

const REFINEMENT_STEPS: usize = 3;

/// Factorized reduced KKT system for one scaling.
struct Kkt<'a> {
    p: &'a RealProblem,
    scal: &'a [BlockScaling],
    l: Sym,
    /// `true` when `H + AᵀA` was factorized instead of `H`.
    augmented: bool,
    /// `L⁻¹Aᵀ` and the Cholesky factor of `A H⁻¹ Aᵀ`.
    eq: Option<(Sym, Sym)>,
}

impl<'a> Kkt<'a> {
    fn factor(p: &'a RealProblem, scal: &'a [BlockScaling]) -> Option<Self> {
        let h = schur_complement(p, scal);
        let mut l = h.clone();
        let mut augmented = false;
        if !cholesky_in_place(&mut l) {
            augmented = true;
            l = h;
            for row in &p.a_rows {
                for &(i, ai) in row {
                    for &(j, aj) in row {
                        if i >= j {
                            l[(i, j)] += ai * aj;
                        }
                    }
                }
            }
            let scale = (0..p.n).map(|i| l[(i, i)].abs()).fold(0.0, f64::max).max(1.0);
            let base = l.clone();
            if !cholesky_in_place(&mut l) {
                l = base;
                for i in 0..p.n {
                    l[(i, i)] += 1e-11 * scale;
                }
                if !cholesky_in_place(&mut l) {
                    return None;
                }
            }
        }
        let eq = if p.m() > 0 {
            let mut lat = Sym::zeros(p.n, p.m());
            for (k, row) in p.a_rows.iter().enumerate() {
                let mut col = DVector::zeros(p.n);
                for &(j, a) in row {
                    col[j] += a;
                }
                forward_substitute(&l, col.as_mut_slice());
                lat.set_column(k, &col);
            }
            let mut gram = lat.transpose() * &lat;
            if !cholesky_in_place(&mut gram) {
                return None;
            }
            Some((lat, gram))
        } else {
            None
        };
        Some(Self { p, scal, l, augmented, eq })
    }

    fn solve_once(&self, bx: &DVector<f64>, by: &DVector<f64>, bz: &[Sym]) -> (DVector<f64>, DVector<f64>, Vec<Sym>) {
        let p = self.p;
        let scaled: Vec<Sym> = self.scal.iter().zip(bz).map(|(s, b)| s.wtw_inv(b)).collect();
        let mut r = bx + p.gt_mul(&scaled);
        if self.augmented {
            r += p.at_mul(by);
        }
        let (x, y) = match &self.eq {
            None => (cholesky_solve(&self.l, &r), DVector::zeros(0)),
            Some((lat, gram)) => {
                let mut t = r.clone();
                forward_substitute(&self.l, t.as_mut_slice());
                let mut y = lat.transpose() * &t - by;
                forward_substitute(gram, y.as_mut_slice());
                backward_substitute(gram, y.as_mut_slice());
                let x = cholesky_solve(&self.l, &(r - p.at_mul(&y)));
                (x, y)
            }
        };
        let gx = p.g_mul(&x);
        let z = self.scal.iter().zip(gx.iter().zip(bz)).map(|(s, (g, b))| s.wtw_inv(&(g - b))).collect();
        (x, y, z)
    }

    /// Solves `[0 Aᵀ Gᵀ; A 0 0; G 0 −WᵀW] (x, y, z) = (bx, by, bz)` with a
    /// few steps of iterative refinement.
    fn solve(&self, bx: &DVector<f64>, by: &DVector<f64>, bz: &[Sym]) -> (DVector<f64>, DVector<f64>, Vec<Sym>) {
        let p = self.p;
        // The third residual is formed in scaled coordinates; forming
        // `WᵀW z` directly amplifies rounding on ill-conditioned blocks.
        let residual = |x: &DVector<f64>, y: &DVector<f64>, z: &[Sym]| {
            let ex = bx - p.at_mul(y) - p.gt_mul(z);
            let ey = by - p.a_mul(x);
            let gx = p.g_mul(x);
            let ez_s: Vec<Sym> =
                self.scal.iter().zip(bz.iter().zip(gx.iter().zip(z))).map(|(s, (b, (g, zz)))| s.wt_inv(&(b - g)) + s.w(zz)).collect();
            let norm = ex.norm() + ey.norm() + fro_norm(&ez_s);
            (ex, ey, ez_s, norm)
        };
        let scale = bx.norm() + by.norm() + fro_norm(bz);
        let mut sol = self.solve_once(bx, by, bz);
        let mut res = residual(&sol.0, &sol.1, &sol.2);
        for _ in 0..REFINEMENT_STEPS {
            let (ex, ey, ez_s, norm) = &res;
            if *norm <= 1e-15 * scale {
                break;
            }
            let ez: Vec<Sym> = self.scal.iter().zip(ez_s).map(|(s, e)| s.wt(e)).collect();
            let (dx, dy, dz) = self.solve_once(ex, ey, &ez);
            let mut z = sol.2.clone();
            axpy(&mut z, 1.0, &dz);
            let candidate = (&sol.0 + dx, &sol.1 + dy, z);
            let next = residual(&candidate.0, &candidate.1, &candidate.2);
            // Refinement can diverge when the factorization is poor; keep
            // the best solution seen.
            if !(next.3 < *norm) {
                break;
            }
            sol = candidate;
            res = next;
        }
        sol
    }
}

/// `H_ij = Σ_blocks tr(G_i v G_j v)`, lower triangle filled.
fn schur_complement(p: &RealProblem, scal: &[BlockScaling]) -> Sym {
    let mut h = Sym::zeros(p.n, p.n);
    for (blk, sc) in p.blocks.iter().zip(scal) {
        let v = &sc.v;
        let nv = blk.vars.len();
        let dense: Vec<Option<Sym>> = blk
            .entries
            .iter()
            .map(|ents| {
                (ents.len() > 2 * blk.dim).then(|| {
                    let mut g = Sym::zeros(blk.dim, blk.dim);
                    for &(r, c, val) in ents {
                        g[(r, c)] += val;
                    }
                    v * g * v
                })
            })
            .collect();
        for a in 0..nv {
            let ea = &blk.entries[a];
            for b in a..nv {
                let eb = &blk.entries[b];
                let val = match (&dense[a], &dense[b]) {
                    (Some(pa), _) => eb.iter().map(|&(r, c, g)| g * pa[(r, c)]).sum::<f64>(),
                    (None, Some(pb)) => ea.iter().map(|&(r, c, g)| g * pb[(r, c)]).sum::<f64>(),
                    (None, None) => {
                        let mut acc = 0.0;
                        for &(pp, q, ga) in ea {
                            for &(r, s, gb) in eb {
                                acc += ga * gb * v[(q, r)] * v[(s, pp)];
                            }
                        }
                        acc
                    }
                };
                let (i, j) = (blk.vars[a], blk.vars[b]);
                h[(i.max(j), i.min(j))] += val;
            }
        }
    }
    h
}

fn shift_into_cone(m: &mut [Sym]) {
    let nrm = fro_norm(m);
    let t = m.iter().map(|b| -min_eig(b)).fold(f64::NEG_INFINITY, f64::max);
    if t >= -1e-8 * nrm.max(1.0) {
        for b in m.iter_mut() {
            for i in 0..b.nrows() {
                b[(i, i)] += 1.0 + t;
            }
        }
    }
}

/// Iterates within this factor of the tolerances are kept as a fallback.
const RECOVERY_FACTOR: f64 = 10.0;

fn recover(best: Option<(f64, RawSolution)>, failed: RawSolution) -> RawSolution {
    best.map_or(failed, |(_, b)| b)
}

pub(crate) fn solve(p: &RealProblem, opts: &SolveOptions) -> RawSolution {
    let m = p.m();
    let nb = p.blocks.len();
    let deg = p.degree() as f64;
    let h: Vec<Sym> = p.blocks.iter().map(|b| b.h.clone()).collect();
    let resx0 = p.c.norm().max(1.0);
    let resy0 = p.b.norm().max(1.0);
    let resz0 = fro_norm(&h).max(1.0);

    let trouble = |x: DVector<f64>, iterations: usize| RawSolution {
        status: SolveStatus::NumericalTrouble,
        x,
        dual_objective: f64::NAN,
        relative_gap: f64::INFINITY,
        iterations,
    };

    // Starting point: least-squares solutions with identity scaling.
    let ident: Vec<BlockScaling> = p.blocks.iter().map(|b| BlockScaling::identity(b.dim)).collect();
    let Some(kkt) = Kkt::factor(p, &ident) else {
        return trouble(DVector::zeros(p.n), 0);
    };
    let (mut x, _, neg_s) = kkt.solve(&DVector::zeros(p.n), &p.b, &h);
    let mut s: Vec<Sym> = neg_s.iter().map(|b| -b).collect();
    let zeros: Vec<Sym> = p.blocks.iter().map(|b| Sym::zeros(b.dim, b.dim)).collect();
    let (_, mut y, mut z) = kkt.solve(&(-&p.c), &DVector::zeros(m), &zeros);
    drop(kkt);
    shift_into_cone(&mut s);
    shift_into_cone(&mut z);
    let (mut tau, mut kappa) = (1.0f64, 1.0f64);

    // Best nearly converged iterate, returned if the iteration later breaks down.
    let mut best: Option<(f64, RawSolution)> = None;
    let mut iter = 0;
    loop {
        let aty = p.at_mul(&y);
        let gtz = p.gt_mul(&z);
        let hrx = -(&aty + &gtz);
        let rx = &aty + &gtz + &p.c * tau;
        let hry = p.a_mul(&x);
        let ry = &hry - &p.b * tau;
        let gx = p.g_mul(&x);
        let hrz: Vec<Sym> = s.iter().zip(&gx).map(|(a, b)| a + b).collect();
        let rz: Vec<Sym> = hrz.iter().zip(&h).map(|(a, b)| a - b * tau).collect();
        let cx = p.c.dot(&x);
        let by = p.b.dot(&y);
        let hz = inner(&h, &z);
        let rt = kappa + cx + by + hz;
        let gap = inner(&s, &z);
        let mu = (gap + tau * kappa) / (deg + 1.0);
        let pcost = cx / tau;
        let dcost = -(by + hz) / tau;
        let pres = (ry.norm() / resy0).max(fro_norm(&rz) / resz0) / tau;
        let dres = rx.norm() / resx0 / tau;
        let rel_gap = gap / (tau * tau) / pcost.abs().max(1.0);

        let current =
            || RawSolution { status: SolveStatus::Optimal, x: &x / tau, dual_objective: dcost, relative_gap: rel_gap, iterations: iter };
        let score = (pres / opts.feasibility_tolerance).max(dres / opts.feasibility_tolerance).max(rel_gap / opts.gap_tolerance);
        if score <= 1.0 {
            return current();
        }
        if score <= RECOVERY_FACTOR && best.as_ref().is_none_or(|(s, _)| score < *s) {
            best = Some((score, current()));
        }
        if hz + by < 0.0 {
            let pinf = hrx.norm() / resx0 / -(hz + by);
            if pinf <= opts.feasibility_tolerance {
                return RawSolution {
                    status: SolveStatus::Infeasible,
                    x,
                    dual_objective: f64::INFINITY,
                    relative_gap: f64::NAN,
                    iterations: iter,
                };
            }
        }
        if cx < 0.0 {
            let dinf = (hry.norm() / resy0).max(fro_norm(&hrz) / resz0) / -cx;
            if dinf <= opts.feasibility_tolerance {
                return RawSolution {
                    status: SolveStatus::Unbounded,
                    x: x / -cx,
                    dual_objective: f64::NEG_INFINITY,
                    relative_gap: f64::NAN,
                    iterations: iter,
                };
            }
        }
        if iter >= opts.max_iterations {
            return recover(
                best,
                RawSolution {
                    status: SolveStatus::MaxIterations,
                    x: x / tau,
                    dual_objective: dcost,
                    relative_gap: rel_gap,
                    iterations: iter,
                },
            );
        }

        let Some(scal) = s.iter().zip(&z).map(|(sb, zb)| BlockScaling::nesterov_todd(sb, zb)).collect::<Option<Vec<_>>>() else {
            return recover(best, trouble(x / tau, iter));
        };
        let Some(kkt) = Kkt::factor(p, &scal) else {
            return recover(best, trouble(x / tau, iter));
        };

        let neg_b = -&p.b;
        let neg_h: Vec<Sym> = h.iter().map(|b| -b).collect();
        let (x1, y1, z1) = kkt.solve(&p.c, &neg_b, &neg_h);
        let wz1: f64 = scal.iter().zip(&z1).map(|(sc, zb)| sc.w(zb).norm_squared()).sum();

        let mut affine: Option<(Vec<Sym>, Vec<Sym>, f64, f64)> = None;
        let mut alpha_aff: f64 = 0.0;
        let mut step = None;
        for pass in 0..2 {
            let sigma = if pass == 0 { 0.0 } else { (1.0 - alpha_aff).powi(3) };
            let keep = 1.0 - sigma;
            let mut delta = Vec::with_capacity(nb);
            for (k, sc) in scal.iter().enumerate() {
                let d = sc.lambda.len();
                let mut target = Sym::zeros(d, d);
                for i in 0..d {
                    target[(i, i)] = -sc.lambda[i] * sc.lambda[i] + sigma * mu;
                }
                if let Some((dsa, dza, _, _)) = &affine {
                    let prod = &dsa[k] * &dza[k];
                    target -= (&prod + prod.transpose()) * 0.5;
                }
                delta.push(Sym::from_fn(d, d, |i, j| 2.0 * target[(i, j)] / (sc.lambda[i] + sc.lambda[j])));
            }
            let mut dk_target = -tau * kappa + sigma * mu;
            if let Some((_, _, dta, dka)) = &affine {
                dk_target -= dta * dka;
            }
            let bx = &rx * -keep;
            let bys = &ry * -keep;
            let bz: Vec<Sym> = rz.iter().zip(scal.iter().zip(&delta)).map(|(r, (sc, dl))| -(r * keep) - sc.wt(dl)).collect();
            let (x0, y0, z0) = kkt.solve(&bx, &bys, &bz);
            let btau = -keep * rt - dk_target / tau;
            let pu0 = p.c.dot(&x0) + p.b.dot(&y0) + inner(&h, &z0);
            let dtau = (pu0 - btau) / (wz1 + kappa / tau);
            let dx = &x0 - &x1 * dtau;
            let dy = &y0 - &y1 * dtau;
            let dz: Vec<Sym> = z0.iter().zip(&z1).map(|(a, b)| a - b * dtau).collect();
            let dkappa = (dk_target - kappa * dtau) / tau;
            let dz_s: Vec<Sym> = scal.iter().zip(&dz).map(|(sc, d)| sc.w(d)).collect();
            // `ds` from the linearised primal equation `G dx + ds = −keep·rz + dτ·h`
            // rather than from the scaling, which loses accuracy on badly
            // conditioned blocks.
            let gdx = p.g_mul(&dx);
            let ds: Vec<Sym> = rz.iter().zip(h.iter().zip(&gdx)).map(|(r, (hb, g))| symmetrize(&(hb * dtau - r * keep - g))).collect();
            let ds_s: Vec<Sym> = scal.iter().zip(&ds).map(|(sc, d)| sc.wt_inv(d)).collect();

            let mut amax = f64::INFINITY;
            for (sc, (a, b)) in scal.iter().zip(ds_s.iter().zip(&dz_s)) {
                amax = amax.min(sc.max_step(a)).min(sc.max_step(b));
            }
            if dtau < 0.0 {
                amax = amax.min(-tau / dtau);
            }
            if dkappa < 0.0 {
                amax = amax.min(-kappa / dkappa);
            }
            if pass == 0 {
                alpha_aff = amax.min(1.0);
                affine = Some((ds_s, dz_s, dtau, dkappa));
            } else {
                let alpha = (0.99 * amax).min(1.0);
                step = Some((alpha, dx, dy, dz, ds, dtau, dkappa));
            }
        }
        let (alpha, dx, dy, dz, ds, dtau, dkappa) = step.expect("two passes ran");
        if !(alpha > 1e-14) || !alpha.is_finite() {
            return recover(best, trouble(x / tau, iter));
        }
        x += dx * alpha;
        y += dy * alpha;
        axpy(&mut z, alpha, &dz);
        axpy(&mut s, alpha, &ds);
        for b in s.iter_mut().chain(z.iter_mut()) {
            *b = symmetrize(b);
        }
        tau += alpha * dtau;
        kappa += alpha * dkappa;
        iter += 1;
    }
}
