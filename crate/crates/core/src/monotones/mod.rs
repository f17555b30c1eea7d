//! Channel resource measures: max-relative entropy (plain and smoothed),
//! robustness and log-robustness, max-information, the MIO cost bracket and
//! the heuristic powers.

mod ascent;
mod powers;

pub use ascent::AscentOptions;
pub use powers::{channel_rel_ent, generating_power, increasing_power, PowerResult, RelEntResult, StateMonotone};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{Channel, DensityMatrix};
use crate::conic::{self, LinExpr, MatExpr, ProgramBuilder, SolveOptions, SolveStatus};
use crate::error::{Error, Result};
use crate::free_sets::{self, FreeSetSpec};
use crate::linalg::{self, CMat};
use crate::report::SolveSummary;
use crate::states::{self, psd_dmax, ExtReal};

/// Radius of the smoothing ball, measured in half diamond distance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SmoothParams {
    pub epsilon: f64,
    #[serde(default)]
    pub solver: SolveOptions,
}

impl SmoothParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        let p = Self { epsilon, solver: SolveOptions::default() };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidParameter(format!("smoothing radius {} outside [0, 1]", self.epsilon)));
        }
        Ok(())
    }
}

fn same_dims(n: &Channel, m: &Channel) -> Result<()> {
    if n.dim_in() != m.dim_in() || n.dim_out() != m.dim_out() {
        return Err(Error::dims(format!("channels are {}→{} and {}→{}", n.dim_in(), n.dim_out(), m.dim_in(), m.dim_out())));
    }
    Ok(())
}

fn real_program(channels: &[&Channel]) -> bool {
    channels.iter().all(|c| c.is_real())
}

/// `D_max(n‖m) = log₂ min{λ : λ J_m ⪰ J_n}` in bits; `+∞` when the support
/// condition fails.
pub fn channel_dmax(n: &Channel, m: &Channel) -> Result<ExtReal> {
    same_dims(n, m)?;
    psd_dmax(n.choi(), m.choi())
}

/// Constrains a Choi variable to a channel within half diamond distance
/// `eps` of `n`.
fn smoothing_ball(b: &mut ProgramBuilder, jp: &MatExpr, n: &Channel, eps: f64, real: bool) {
    let (din, dout) = (n.dim_in(), n.dim_out());
    b.psd(jp.clone());
    b.eq_zero_matrix(&jp.partial_trace_second(din, dout).add_constant(&-linalg::identity(din)));
    let z = b.hermitian(din * dout, real).expr();
    b.psd(z.clone());
    b.psd(z.sub(jp).add_constant(n.choi()));
    b.psd(MatExpr::constant(linalg::identity(din) * linalg::re(eps)).sub(&z.partial_trace_second(din, dout)));
}

/// Orthonormal basis (columns) of the support of `m`, and the compressed
/// eigenvalues; `None` when `m` has full support.
fn support_basis(m: &CMat) -> Option<(CMat, Vec<f64>)> {
    let (vals, vecs) = linalg::eigh(m);
    let top = vals.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > states::SUPPORT_TOL * top.max(1.0)).collect();
    if keep.len() == vals.len() {
        return None;
    }
    let basis = CMat::from_fn(m.nrows(), keep.len(), |r, c| vecs[(r, keep[c])]);
    Some((basis, keep.iter().map(|&k| vals[k]).collect()))
}

/// A Hermitian variable of dimension `dim` confined to the column span of
/// `basis` (all of `ℂ^dim` when `None`), with the constraint
/// `λ m − X ⪰ 0`. Returns the variable as an expression.
fn dominated_variable(b: &mut ProgramBuilder, m: &CMat, lambda: conic::Var, real: bool) -> MatExpr {
    match support_basis(m) {
        None => {
            let x = b.hermitian(m.nrows(), real).expr();
            b.psd(MatExpr::scalar_times(lambda, m).sub(&x));
            x
        }
        Some((v, vals)) => {
            let real = real && linalg::is_real(&v, 1e-14);
            let k = vals.len();
            let small = b.hermitian(k, real).expr();
            b.psd(MatExpr::scalar_times(lambda, &linalg::from_real_diag(&vals)).sub(&small));
            let d = m.nrows();
            small.map_units(d, |r, c| {
                let mut out = Vec::with_capacity(d * d);
                for a in 0..d {
                    for bb in 0..d {
                        let w = v[(a, r)] * v[(bb, c)].conj();
                        if w.norm() > 1e-15 {
                            out.push((a, bb, w));
                        }
                    }
                }
                out
            })
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SmoothDmaxResult {
    pub epsilon: f64,
    /// Smoothed value in bits.
    pub value: ExtReal,
    pub unsmoothed: ExtReal,
    /// Smoothed `D_max` of the normalised Choi states, a lower bound on `value`.
    pub lower_bound: ExtReal,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimal_smoothed: Option<Channel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveSummary>,
}

/// `min log₂ λ` over channels `N′` with `½‖N′ − n‖_⋄ ≤ ε` and `λ J_m ⪰ J_N′`.
pub fn channel_dmax_smooth(n: &Channel, m: &Channel, smooth: &SmoothParams) -> Result<SmoothDmaxResult> {
    same_dims(n, m)?;
    smooth.validate()?;
    let unsmoothed = channel_dmax(n, m)?;
    let eps = smooth.epsilon;
    if eps == 0.0 {
        return Ok(SmoothDmaxResult {
            epsilon: 0.0,
            value: unsmoothed,
            unsmoothed,
            lower_bound: unsmoothed,
            optimal_smoothed: None,
            solve: None,
        });
    }
    let (din, dout) = (n.dim_in(), n.dim_out());
    let real = real_program(&[n, m]);
    // Measuring λ in units of its unsmoothed value keeps the program well
    // scaled when m is close to singular.
    let unit = unsmoothed.finite().map_or(1.0, f64::exp2);
    let mut b = ProgramBuilder::new();
    let lambda = b.scalar();
    let jp = dominated_variable(&mut b, &(m.choi() * linalg::re(unit)), lambda, real);
    smoothing_ball(&mut b, &jp, n, eps, real);
    b.minimize(LinExpr::from(lambda));
    let r = conic::solve(&b.build(), &smooth.solver)?;
    let lower_bound = state_smoothed_dmax(n, m, eps, unit, &smooth.solver)?;
    if r.status == SolveStatus::Infeasible {
        return Ok(SmoothDmaxResult {
            epsilon: eps,
            value: ExtReal::Infinite,
            unsmoothed,
            lower_bound,
            optimal_smoothed: None,
            solve: Some(SolveSummary::from(&r)),
        });
    }
    let r = r.into_optimal("smoothed max-relative entropy")?;
    let mut value = log2_positive(r.objective_value * unit);
    // The smoothed value never exceeds the unsmoothed one; clip solver noise.
    if let ExtReal::Finite(u) = unsmoothed {
        value = value.min(u);
    }
    let smoothed = Channel::from_choi_unchecked(din, dout, linalg::hermitize(&jp.value(&r.variable_values)))?;
    Ok(SmoothDmaxResult {
        epsilon: eps,
        value: ExtReal::Finite(value),
        unsmoothed,
        lower_bound,
        optimal_smoothed: Some(smoothed),
        solve: Some(SolveSummary::from(&r)),
    })
}

fn log2_positive(x: f64) -> f64 {
    if x > 0.0 {
        x.log2()
    } else {
        f64::NEG_INFINITY
    }
}

/// `min log₂ λ` over states `σ′` within trace distance `ε` of `J_n/d_in`
/// with `σ′ ≤ λ J_m/d_in`; `λ` is measured in multiples of `unit`.
fn state_smoothed_dmax(n: &Channel, m: &Channel, eps: f64, unit: f64, options: &SolveOptions) -> Result<ExtReal> {
    let din = n.dim_in() as f64;
    let dim = n.choi().nrows();
    let real = real_program(&[n, m]);
    let omega_m = m.choi() * linalg::re(unit / din);
    let omega_n = n.choi() / linalg::re(din);
    let mut b = ProgramBuilder::new();
    let lambda = b.scalar();
    let sigma = dominated_variable(&mut b, &omega_m, lambda, real);
    b.psd(sigma.clone());
    b.eq(sigma.trace(), 1.0);
    let p = b.hermitian(dim, real).expr();
    let q = b.hermitian(dim, real).expr();
    b.psd(p.clone());
    b.psd(q.clone());
    b.eq_zero_matrix(&sigma.sub(&p).add(&q).add_constant(&-omega_n));
    b.nonneg(&LinExpr::constant(2.0 * eps).sub(&p.trace().add(&q.trace())));
    b.minimize(LinExpr::from(lambda));
    let r = conic::solve(&b.build(), options)?;
    if r.status == SolveStatus::Infeasible {
        return Ok(ExtReal::Infinite);
    }
    let r = r.into_optimal("state-smoothed max-relative entropy")?;
    Ok(ExtReal::Finite(log2_positive(r.objective_value * unit)))
}

#[derive(Clone, Debug, Serialize)]
pub struct RobustnessResult {
    /// Global robustness `R ≥ 0`.
    pub robustness: f64,
    /// `log₂(1 + R)` in bits.
    pub log_robustness: f64,
    pub optimal_free: Channel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimal_smoothed: Option<Channel>,
    pub epsilon: f64,
    pub solve: SolveSummary,
}

/// `LR = min_{M free} D_max(n‖M)` (or over `N′` in the smoothing ball), as
/// one SDP in the scaled free Choi matrix `Y = λ J_M`.
pub fn robustness(n: &Channel, spec: &FreeSetSpec, smooth: Option<&SmoothParams>) -> Result<RobustnessResult> {
    match smooth {
        Some(s) => robustness_with(n, spec, s.epsilon, &s.solver),
        None => robustness_with(n, spec, 0.0, &SolveOptions::default()),
    }
}

pub fn robustness_with(n: &Channel, spec: &FreeSetSpec, epsilon: f64, options: &SolveOptions) -> Result<RobustnessResult> {
    if n.dim_in() != spec.dim_in || n.dim_out() != spec.dim_out {
        return Err(Error::dims(format!("channel is {}→{}, cone is {}→{}", n.dim_in(), n.dim_out(), spec.dim_in, spec.dim_out)));
    }
    SmoothParams { epsilon, solver: options.clone() }.validate()?;
    let cone = free_sets::compile(spec, true)?;
    let (din, dout) = (n.dim_in(), n.dim_out());
    let real = n.is_real() && cone.is_real();
    let mut b = ProgramBuilder::new();
    let lambda = b.scalar();
    let y = b.hermitian(din * dout, real).expr();
    cone.impose(&mut b, &y, &LinExpr::from(lambda));
    let smoothed = if epsilon > 0.0 {
        let jp = b.hermitian(din * dout, real).expr();
        smoothing_ball(&mut b, &jp, n, epsilon, real);
        b.psd(y.sub(&jp));
        Some(jp)
    } else {
        b.psd(y.add_constant(&-n.choi()));
        None
    };
    b.minimize(LinExpr::from(lambda));
    let r = conic::solve(&b.build(), options)?.into_optimal(&format!("robustness over the {} cone", spec.name()))?;
    let lam = r.objective_value;
    let robustness = (lam - 1.0).max(0.0);
    let y_val = y.value(&r.variable_values) / linalg::re(lam.max(f64::MIN_POSITIVE));
    let optimal_free =
        Channel::from_choi_unchecked(din, dout, linalg::hermitize(&y_val))?.with_label(format!("optimal {} channel", spec.name()));
    let optimal_smoothed = match smoothed {
        Some(jp) => Some(Channel::from_choi_unchecked(din, dout, linalg::hermitize(&jp.value(&r.variable_values)))?),
        None => None,
    };
    Ok(RobustnessResult {
        robustness,
        log_robustness: (1.0 + robustness).log2(),
        optimal_free,
        optimal_smoothed,
        epsilon,
        solve: SolveSummary::from(&r),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct IMaxResult {
    /// Max-information in bits.
    pub value: f64,
    /// Optimal output state `σ`.
    pub sigma: DensityMatrix,
    /// Log-robustness over the constant channels, computed independently.
    pub constant_robustness: f64,
    pub solve: SolveSummary,
}

/// `inf_σ D_max(J_n/d_in ‖ I/d_in ⊗ σ) = log₂ min{tr Σ : I ⊗ Σ ⪰ J_n}`.
pub fn i_max(n: &Channel) -> Result<IMaxResult> {
    i_max_with(n, &SolveOptions::default())
}

pub fn i_max_with(n: &Channel, options: &SolveOptions) -> Result<IMaxResult> {
    let (din, dout) = (n.dim_in(), n.dim_out());
    let mut b = ProgramBuilder::new();
    let sigma = b.hermitian(dout, n.is_real()).expr();
    b.psd(sigma.identity_kron(din).add_constant(&-n.choi()));
    b.minimize(sigma.trace());
    let r = conic::solve(&b.build(), options)?.into_optimal("max-information")?;
    let s = sigma.value(&r.variable_values);
    let constant_robustness = robustness_with(n, &FreeSetSpec::constant(din, dout), 0.0, options)?.log_robustness;
    Ok(IMaxResult {
        value: log2_positive(r.objective_value).max(0.0),
        sigma: DensityMatrix::from_trusted(s),
        constant_robustness,
        solve: SolveSummary::from(&r),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CostBracket {
    pub epsilon: f64,
    /// `LR^ε` over MIO.
    pub lower: f64,
    /// `log₂⌈1 + R^ε⌉`.
    pub upper: f64,
    pub robustness: f64,
}

/// Bracket on the one-shot MIO simulation cost of `n`.
pub fn mio_cost_bracket(n: &Channel, eps: f64) -> Result<CostBracket> {
    mio_cost_bracket_with(n, eps, &SolveOptions::default())
}

pub fn mio_cost_bracket_with(n: &Channel, eps: f64, options: &SolveOptions) -> Result<CostBracket> {
    let r = robustness_with(n, &FreeSetSpec::mio(n.dim_in(), n.dim_out()), eps, options)?;
    let upper = (1.0 + r.robustness - 1e-9).ceil().max(1.0).log2();
    Ok(CostBracket { epsilon: eps, lower: r.log_robustness, upper, robustness: r.robustness })
}

/// `max_i C_r(σ_i)` for a classical-quantum channel `|i⟩⟨i| ↦ σ_i`.
pub fn cq_asymptotic_cost(n: &Channel) -> Result<f64> {
    let states = n.cq_states(1e-9).ok_or(Error::NotCqChannel)?;
    let mut best: f64 = 0.0;
    for s in &states {
        best = best.max(states::coherence_rel_ent(s, None)?);
    }
    Ok(best)
}

#[derive(Clone, Debug, Serialize)]
pub struct MonotoneCheck {
    pub property: String,
    pub evaluations: usize,
    pub violations: usize,
    /// Largest amount by which an inequality failed (≤ 0 when none did).
    pub worst_excess: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl MonotoneCheck {
    fn new(property: &str) -> Self {
        Self { property: property.into(), evaluations: 0, violations: 0, worst_excess: f64::NEG_INFINITY, witness: None }
    }

    /// Records the inequality `lhs ≤ rhs + slack`.
    fn record(&mut self, lhs: f64, rhs: f64, witness: impl FnOnce() -> String) {
        self.evaluations += 1;
        let excess = lhs - rhs;
        self.worst_excess = self.worst_excess.max(excess);
        if excess > SUITE_SLACK {
            self.violations += 1;
            if self.witness.is_none() {
                self.witness = Some(witness());
            }
        }
    }

    fn record_bool(&mut self, ok: bool, witness: impl FnOnce() -> String) {
        self.record(if ok { 0.0 } else { 1.0 }, 0.0, witness);
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MonotoneSuiteReport {
    pub cone: String,
    pub trials: usize,
    pub seed: u64,
    pub checks: Vec<MonotoneCheck>,
}

impl MonotoneSuiteReport {
    pub fn total_violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum()
    }
}

const SUITE_SLACK: f64 = 1e-6;
const FAITHFUL_TOL: f64 = 1e-6;

/// Randomised checks of the log-robustness axioms on `spec`: monotonicity
/// under free pre- and post-processing and under tensoring with free
/// channels, convexity of `R`, and faithfulness.
pub fn monotone_suite(spec: &FreeSetSpec, trials: usize, seed: u64) -> Result<MonotoneSuiteReport> {
    let opts = SolveOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (din, dout) = (spec.dim_in, spec.dim_out);
    let post_spec = spec.at_dims(dout, dout)?;
    let pre_spec = spec.at_dims(din, din)?;
    let product = spec.tensor(spec)?;
    let lr = |ch: &Channel, s: &FreeSetSpec| robustness_with(ch, s, 0.0, &opts);

    let mut left = MonotoneCheck::new("left composition");
    let mut right = MonotoneCheck::new("right composition");
    let mut tensor = MonotoneCheck::new("tensor with free");
    let mut convex = MonotoneCheck::new("convexity of R");
    let mut faithful = MonotoneCheck::new("faithfulness");
    for t in 0..trials {
        let n = Channel::random(&mut rng, din, dout);
        let base = lr(&n, spec)?;
        let post = free_sets::sample_free_with(&post_spec, &mut rng)?;
        let pre = free_sets::sample_free_with(&pre_spec, &mut rng)?;
        let free = free_sets::sample_free_with(spec, &mut rng)?;

        let v = lr(&Channel::compose(&post, &n)?, spec)?.log_robustness;
        left.record(v, base.log_robustness, || format!("trial {t}: LR(M∘N) = {v:.9} > LR(N) = {:.9}", base.log_robustness));
        let v = lr(&Channel::compose(&n, &pre)?, spec)?.log_robustness;
        right.record(v, base.log_robustness, || format!("trial {t}: LR(N∘M) = {v:.9} > LR(N) = {:.9}", base.log_robustness));
        let v = lr(&n.tensor(&free), &product)?.log_robustness;
        tensor.record(v, base.log_robustness, || format!("trial {t}: LR(N⊗M) = {v:.9} > LR(N) = {:.9}", base.log_robustness));

        let other = Channel::random(&mut rng, din, dout);
        let p: f64 = rng.random();
        let mixed = Channel::mix(&[(p, &n), (1.0 - p, &other)])?;
        let r_mix = lr(&mixed, spec)?.robustness;
        let bound = p * base.robustness + (1.0 - p) * lr(&other, spec)?.robustness;
        convex.record(r_mix, bound, || format!("trial {t}: R(mixture, p = {p:.3}) = {r_mix:.9} > {bound:.9}"));

        let free_lr = lr(&free, spec)?.log_robustness;
        faithful.record_bool(free_lr <= FAITHFUL_TOL, || format!("trial {t}: free channel has LR = {free_lr:.3e}"));
        let is_free = free_sets::is_free(&n, spec, FAITHFUL_TOL)?;
        faithful.record_bool((base.log_robustness <= FAITHFUL_TOL) == is_free, || {
            format!("trial {t}: LR = {:.3e} but membership test says {is_free}", base.log_robustness)
        });
    }
    Ok(MonotoneSuiteReport { cone: spec.name().into(), trials, seed, checks: vec![left, right, tensor, convex, faithful] })
}
