//! Constructive protocols: the convex-split mixture, the catalytic erasure
//! process built on it, and verification of simulation triples
//! (pre-processing, channel, post-processing).

mod schur_weyl;

use serde::Serialize;

use crate::channel::Channel;
use crate::conic::SolveOptions;
use crate::error::{Error, Result};
use crate::free_sets::{self, FreeSetSpec};
use crate::monotones::{self, robustness_with};
use crate::norms;
use crate::report::SolveSummary;

/// Size limits for the multi-copy computations.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct Budget {
    /// Largest Choi dimension `(d_in d_out)ⁿ` handed to the diamond SDP.
    pub max_sdp_choi_dim: usize,
    /// Largest output dimension `d_outⁿ` for the dense constant-channel path.
    pub max_dense_output_dim: usize,
    /// Largest `n` for the qubit block-diagonal constant-channel path.
    pub max_qubit_copies: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Self { max_sdp_choi_dim: 64, max_dense_output_dim: 4096, max_qubit_copies: 512 }
    }
}

#[derive(Clone, Debug, Default)]
pub struct ProtocolOptions {
    pub budget: Budget,
    pub solver: SolveOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvexSplitReport {
    pub n: usize,
    /// `2^{D_max(α‖β)}`.
    pub lambda: f64,
    /// `½‖γ⁽ⁿ⁾ − β^{⊗n}‖_⋄`.
    pub measured_distance: f64,
    /// `√(λ/n)`.
    pub bound: f64,
    pub used_shortcut: bool,
    /// Choi dimension of `γ⁽ⁿ⁾`, saturating.
    pub gamma_dim: usize,
    pub within_bound: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveSummary>,
}

const CONSTANT_TOL: f64 = 1e-10;
const BOUND_SLACK: f64 = 1e-6;

/// Builds `γ⁽ⁿ⁾ = (1/n) Σᵢ β^{⊗i−1} ⊗ α ⊗ β^{⊗n−i}` and measures its half
/// diamond distance to `β^{⊗n}`.
pub fn convex_split(alpha: &Channel, beta: &Channel, n: usize) -> Result<ConvexSplitReport> {
    convex_split_with(alpha, beta, n, &ProtocolOptions::default())
}

pub fn convex_split_with(alpha: &Channel, beta: &Channel, n: usize, options: &ProtocolOptions) -> Result<ConvexSplitReport> {
    if alpha.dim_in() != beta.dim_in() || alpha.dim_out() != beta.dim_out() {
        return Err(Error::dims(format!("channels are {}→{} and {}→{}", alpha.dim_in(), alpha.dim_out(), beta.dim_in(), beta.dim_out())));
    }
    let dmax = monotones::channel_dmax(alpha, beta)?.require_finite("D_max(α‖β)")?;
    split_with_lambda(alpha, beta, n, dmax.exp2().max(1.0), options)
}

/// `λ` is any certified upper bound on `2^{D_max(α‖β)}`.
fn split_with_lambda(alpha: &Channel, beta: &Channel, n: usize, lambda: f64, options: &ProtocolOptions) -> Result<ConvexSplitReport> {
    if n == 0 {
        return Err(Error::InvalidParameter("the number of copies must be at least 1".into()));
    }
    let (din, dout) = (alpha.dim_in(), alpha.dim_out());
    let gamma_dim = (din * dout).saturating_pow(n as u32);
    let constant = alpha.is_constant(CONSTANT_TOL) && beta.is_constant(CONSTANT_TOL);
    let bound = (lambda / n as f64).sqrt();
    let report = |measured: f64, used_shortcut: bool, solve: Option<SolveSummary>| ConvexSplitReport {
        n,
        lambda,
        measured_distance: measured,
        bound,
        used_shortcut,
        gamma_dim,
        within_bound: measured <= bound + BOUND_SLACK,
        solve,
    };
    if alpha.max_abs_diff(beta) <= 1e-12 {
        return Ok(report(0.0, constant, None));
    }
    if constant {
        let a = alpha.output_on_maximally_mixed().into_inner();
        let b = beta.output_on_maximally_mixed().into_inner();
        let budget = &options.budget;
        let measured = if dout == 2 && n <= budget.max_qubit_copies {
            schur_weyl::convex_split_trace_distance(&a, &b, n)
        } else if dout.checked_pow(n as u32).is_some_and(|d| d <= budget.max_dense_output_dim) {
            schur_weyl::convex_split_trace_distance_dense(&a, &b, n)
        } else {
            return Err(Error::BudgetExceeded(format!("constant-channel mixture of {n} copies with output dimension {dout}")));
        };
        return Ok(report(measured.clamp(0.0, 1.0), true, None));
    }
    if gamma_dim > options.budget.max_sdp_choi_dim {
        return Err(Error::BudgetExceeded(format!(
            "diamond SDP on a {gamma_dim}-dimensional Choi matrix (limit {})",
            options.budget.max_sdp_choi_dim
        )));
    }
    let gamma = convex_split_channel(alpha, beta, n)?;
    let (measured, solve) = norms::diamond_distance_report(&gamma, &beta.tensor_power(n), &options.solver)?;
    Ok(report(measured, false, Some(solve)))
}

/// The convex-split channel `(1/n) Σᵢ β ⊗ … ⊗ α (slot i) ⊗ … ⊗ β`.
pub fn convex_split_channel(alpha: &Channel, beta: &Channel, n: usize) -> Result<Channel> {
    if n == 0 {
        return Err(Error::InvalidParameter("convex split needs at least one copy".into()));
    }
    if alpha.dim_in() != beta.dim_in() || alpha.dim_out() != beta.dim_out() {
        return Err(Error::dims("convex split of channels with different dimensions"));
    }
    let terms: Vec<Channel> =
        (0..n).map(|i| (0..n).fold(Channel::identity(1), |acc, j| acc.tensor(if i == j { alpha } else { beta }))).collect();
    let weighted: Vec<(f64, &Channel)> = terms.iter().map(|t| (1.0 / n as f64, t)).collect();
    Channel::mix(&weighted)
}

/// Converse bounds on the erasure cost, for `μ = 2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerBoundInfo {
    pub mu: f64,
    /// `√(ε(2−ε))`.
    pub delta: f64,
    /// `LR^{μδ} + log₂(1 − 1/μ)`.
    pub value: f64,
    /// `LR^δ`, valid for convex cones.
    pub convex_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErasureReport {
    pub epsilon: f64,
    pub eta: f64,
    /// Number of systems acted on: the target plus `n − 1` catalyst copies.
    pub n_used: usize,
    /// `log₂ n_used`.
    pub cost_bits: f64,
    /// `LR^{ε−η}` in bits.
    pub lr_value: f64,
    /// `lr_value + 2 log₂(1/η) − 1`.
    pub upper_bound: f64,
    /// False when the construction exceeded the budget and only the bound
    /// is reported.
    pub executed: bool,
    pub used_shortcut: bool,
    /// Distance of the averaged channel from the catalyst, built on the
    /// smoothed channel.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub protocol_distance: Option<f64>,
    /// `protocol_distance + (ε − η)`, certified by the triangle inequality.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub achieved_distance: Option<f64>,
    pub lower_bound_info: LowerBoundInfo,
    pub solves: Vec<SolveSummary>,
}

/// Erases `n_channel` up to `ε` with a catalyst `F₀^{⊗n−1}` and uniformly
/// random pair transpositions, where `F₀` is the free witness of `LR^{ε−η}`.
pub fn erasure_protocol(n_channel: &Channel, spec: &FreeSetSpec, epsilon: f64, eta: f64) -> Result<ErasureReport> {
    erasure_protocol_with(n_channel, spec, epsilon, eta, &ProtocolOptions::default())
}

pub fn erasure_protocol_with(
    n_channel: &Channel,
    spec: &FreeSetSpec,
    epsilon: f64,
    eta: f64,
    options: &ProtocolOptions,
) -> Result<ErasureReport> {
    if !(0.0 < eta && eta < epsilon && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("need 0 < η < ε < 1, got ε = {epsilon}, η = {eta}")));
    }
    let solver = &options.solver;
    let rob = robustness_with(n_channel, spec, epsilon - eta, solver)?;
    let mut solves = vec![rob.solve.clone()];
    let lr = rob.log_robustness;
    let lambda = lr.exp2();
    // smallest n with log₂ n ≥ LR + log₂(1/(4η²))
    let n = if rob.robustness <= 1e-9 { 1 } else { (lambda / (4.0 * eta * eta) - 1e-9).ceil().max(1.0) as usize };

    let mut f0 = rob.optimal_free.clone();
    let mut smoothed = rob.optimal_smoothed.clone().unwrap_or_else(|| n_channel.clone());
    // For a constant target, precomposing both witnesses with the replacement
    // by a free input state keeps the certificate valid and makes them constant.
    if let Some(sigma) = n_channel.is_constant(1e-9).then(|| spec.free_input_state()).flatten() {
        let replace = Channel::constant(n_channel.dim_in(), &sigma);
        let f0_const = Channel::compose(&f0, &replace)?;
        if free_sets::is_free(&f0_const, spec, 1e-6)? {
            smoothed = Channel::compose(&smoothed, &replace)?;
            f0 = f0_const;
        }
    }
    let (executed, used_shortcut, protocol_distance) = match split_with_lambda(&smoothed, &f0, n, lambda, options) {
        Ok(r) => {
            solves.extend(r.solve.clone());
            (true, r.used_shortcut, Some(r.measured_distance))
        }
        Err(Error::BudgetExceeded(_)) => (false, false, None),
        Err(e) => return Err(e),
    };

    let mu = 2.0;
    let delta = (epsilon * (2.0 - epsilon)).sqrt();
    let mut smooth_lr = |radius: f64| -> Result<f64> {
        if radius >= 1.0 {
            return Ok(0.0);
        }
        let r = robustness_with(n_channel, spec, radius, solver)?;
        solves.push(r.solve.clone());
        Ok(r.log_robustness)
    };
    let lower_bound_info =
        LowerBoundInfo { mu, delta, value: smooth_lr(mu * delta)? + (1.0 - 1.0 / mu).log2(), convex_value: smooth_lr(delta)? };
    Ok(ErasureReport {
        epsilon,
        eta,
        n_used: n,
        cost_bits: (n as f64).log2(),
        lr_value: lr,
        upper_bound: lr + 2.0 * (1.0 / eta).log2() - 1.0,
        executed,
        used_shortcut,
        protocol_distance,
        achieved_distance: protocol_distance.map(|d| d + (epsilon - eta)),
        lower_bound_info,
        solves,
    })
}

fn ancilla_dim_of(pre: &Channel, n: &Channel, post: &Channel) -> Result<usize> {
    if n.dim_in() == 0 || !pre.dim_out().is_multiple_of(n.dim_in()) {
        return Err(Error::dims(format!("pre-processing outputs {} which is not a multiple of {}", pre.dim_out(), n.dim_in())));
    }
    let c = pre.dim_out() / n.dim_in();
    if post.dim_in() != n.dim_out() * c {
        return Err(Error::dims(format!("post-processing expects {} but receives {}⊗{}", post.dim_in(), n.dim_out(), c)));
    }
    Ok(c)
}

/// `post ∘ (n ⊗ id_C) ∘ pre`, where `pre: A′ → A⊗C` and `post: B⊗C → B′`.
pub fn apply_superchannel(pre: &Channel, post: &Channel, ancilla_dim: usize, n: &Channel) -> Result<Channel> {
    if pre.dim_out() != n.dim_in() * ancilla_dim {
        return Err(Error::dims(format!("pre-processing outputs {} but {}⊗{} is needed", pre.dim_out(), n.dim_in(), ancilla_dim)));
    }
    if post.dim_in() != n.dim_out() * ancilla_dim {
        return Err(Error::dims(format!("post-processing expects {} but receives {}⊗{}", post.dim_in(), n.dim_out(), ancilla_dim)));
    }
    let middle = Channel::compose(&n.tensor(&Channel::identity(ancilla_dim)), pre)?;
    Channel::compose(post, &middle)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationReport {
    pub ancilla_dim: usize,
    pub pre_free: bool,
    pub post_free: bool,
    /// `½‖post ∘ (n ⊗ id) ∘ pre − target‖_⋄`.
    pub distance: f64,
    pub epsilon: f64,
    pub within_epsilon: bool,
    /// All three verdicts hold.
    pub passes: bool,
    pub solve: SolveSummary,
}

/// Checks that `(pre, post)` are free and that they turn `n` into an
/// `eps`-approximation of `target`. The ancilla dimension is inferred.
pub fn verify_simulation(
    n: &Channel,
    target: &Channel,
    pre: &Channel,
    post: &Channel,
    spec: &FreeSetSpec,
    eps: f64,
) -> Result<SimulationReport> {
    verify_simulation_with(n, target, pre, post, spec, eps, &SolveOptions::default())
}

pub fn verify_simulation_with(
    n: &Channel,
    target: &Channel,
    pre: &Channel,
    post: &Channel,
    spec: &FreeSetSpec,
    eps: f64,
    options: &SolveOptions,
) -> Result<SimulationReport> {
    let c = ancilla_dim_of(pre, n, post)?;
    let simulated = apply_superchannel(pre, post, c, n)?;
    let tol = options.feasibility_tolerance.max(1e-7) * 10.0;
    let pre_free = free_sets::is_free(pre, &spec.at_dims(pre.dim_in(), pre.dim_out())?, tol)?;
    let post_free = free_sets::is_free(post, &spec.at_dims(post.dim_in(), post.dim_out())?, tol)?;
    let (distance, solve) = norms::diamond_distance_report(&simulated, target, options)?;
    let within_epsilon = distance <= eps + 1e-6;
    Ok(SimulationReport {
        ancilla_dim: c,
        pre_free,
        post_free,
        distance,
        epsilon: eps,
        within_epsilon,
        passes: pre_free && post_free && within_epsilon,
        solve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{permutation_unitary, DensityMatrix};
    use crate::linalg::{self, CMat};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn replacer(state: DensityMatrix) -> Channel {
        Channel::constant(2, &state)
    }

    #[test]
    fn equal_channels_split_exactly() {
        let b = Channel::amplitude_damping(0.4);
        for n in [1, 3, 5] {
            let r = convex_split(&b, &b, n).unwrap();
            assert_eq!(r.measured_distance, 0.0);
            assert!((r.lambda - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn pure_against_maximally_mixed() {
        let alpha = replacer(DensityMatrix::basis(2, 0));
        let beta = replacer(DensityMatrix::maximally_mixed(2));
        let r = convex_split(&alpha, &beta, 8).unwrap();
        assert!(r.used_shortcut);
        assert!((r.lambda - 2.0).abs() < 1e-9);
        assert!(r.measured_distance <= 0.5 + 1e-12);
        assert!((r.measured_distance - PURE_VS_MIXED_N8).abs() < 1e-9, "{}", r.measured_distance);
    }

    // Both operators are diagonal; a string with k zeros gives 2⁻⁸(k/4 − 1),
    // so the distance is ½ Σ_k C(8,k) 2⁻⁸ |k/4 − 1| = 35/256.
    const PURE_VS_MIXED_N8: f64 = 0.13671875;

    #[test]
    fn shortcut_agrees_with_sdp() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let alpha = replacer(DensityMatrix::random(&mut rng, 2));
        let beta = replacer(DensityMatrix::random(&mut rng, 2));
        let lambda = monotones::channel_dmax(&alpha, &beta).unwrap().finite().unwrap().exp2();
        let fast = split_with_lambda(&alpha, &beta, 2, lambda, &ProtocolOptions::default()).unwrap();
        let gamma = convex_split_channel(&alpha, &beta, 2).unwrap();
        let sdp = norms::diamond_distance(&gamma, &beta.tensor_power(2)).unwrap();
        assert!(fast.used_shortcut);
        assert!((fast.measured_distance - sdp).abs() < 1e-6, "{} vs {sdp}", fast.measured_distance);
    }

    #[test]
    fn support_violation_is_an_error() {
        let alpha = replacer(DensityMatrix::basis(2, 0));
        let beta = replacer(DensityMatrix::basis(2, 1));
        assert!(matches!(convex_split(&alpha, &beta, 2), Err(Error::SupportViolation(_))));
    }

    #[test]
    fn general_pairs_respect_budget() {
        let alpha = Channel::amplitude_damping(0.3);
        let beta = Channel::depolarizing(2, 0.5);
        assert!(matches!(convex_split(&alpha, &beta, 4), Err(Error::BudgetExceeded(_))));
        let r = convex_split(&alpha, &beta, 2).unwrap();
        assert!(!r.used_shortcut && r.within_bound, "{r:?}");
        assert_eq!(r.gamma_dim, 16);
    }

    #[test]
    fn free_channels_erase_for_free() {
        let spec = FreeSetSpec::mio(2, 2);
        let r = erasure_protocol(&Channel::dephasing(2), &spec, 0.5, 0.1).unwrap();
        assert_eq!(r.n_used, 1);
        assert_eq!(r.cost_bits, 0.0);
        assert!(r.achieved_distance.unwrap() <= 0.5 + 1e-6);
    }

    #[test]
    fn coherent_replacer_is_erased() {
        let spec = FreeSetSpec::mio(2, 2);
        let target = replacer(DensityMatrix::plus());
        let r = erasure_protocol(&target, &spec, 0.6, 0.1).unwrap();
        assert!(r.executed && r.used_shortcut, "{r:?}");
        assert!(r.achieved_distance.unwrap() <= 0.6 + 1e-6);
        assert!(r.cost_bits <= r.upper_bound + 1.0);
        assert!(r.lower_bound_info.convex_value <= r.cost_bits + 1e-6);
    }

    #[test]
    fn excited_replacer_under_thermal_cone() {
        // τ = diag(0.2, 0.8); the closest reachable state is I/2, so λ = 2.5.
        let h = linalg::from_real_diag(&[1.0, 0.0]);
        let spec = FreeSetSpec::gibbs(h, 4f64.ln()).unwrap();
        let target = replacer(DensityMatrix::basis(2, 0));
        let r = erasure_protocol(&target, &spec, 0.6, 0.1).unwrap();
        assert!((r.lr_value - 2.5f64.log2()).abs() < 1e-6, "{r:?}");
        assert_eq!(r.n_used, 63);
        assert!(r.executed && r.used_shortcut);
        assert!(r.protocol_distance.unwrap() <= 0.1 + 1e-9);
        assert!(r.achieved_distance.unwrap() <= 0.6 + 1e-6);
        assert!(r.cost_bits <= r.upper_bound + 1.0);
    }

    #[test]
    fn erasure_parameters_are_validated() {
        let spec = FreeSetSpec::mio(2, 2);
        let ch = Channel::identity(2);
        assert!(erasure_protocol(&ch, &spec, 0.1, 0.2).is_err());
        assert!(erasure_protocol(&ch, &spec, 1.0, 0.2).is_err());
    }

    #[test]
    fn trivial_superchannel() {
        let n = Channel::amplitude_damping(0.2);
        let out = apply_superchannel(&Channel::identity(2), &Channel::identity(2), 1, &n).unwrap();
        assert!(out.max_abs_diff(&n) < 1e-12);
    }

    #[test]
    fn ancilla_preparation_and_discard() {
        let n = Channel::amplitude_damping(0.2);
        // ρ ↦ ρ ⊗ |1⟩⟨1|, then trace out the ancilla after the channel.
        let pre = Channel::kraus(2, 4, vec![linalg::kron(&linalg::identity(2), &ket(2, 1))]).unwrap();
        let swap = Channel::unitary(&permutation_unitary(&[2, 2], &[1, 0]).unwrap()).unwrap();
        let post = Channel::compose(&Channel::partial_trace_first(2, 2), &swap).unwrap();
        let out = apply_superchannel(&pre, &post, 2, &n).unwrap();
        assert!(out.max_abs_diff(&n) < 1e-12);
    }

    fn ket(d: usize, i: usize) -> CMat {
        CMat::from_fn(d, 1, |r, _| linalg::re(if r == i { 1.0 } else { 0.0 }))
    }

    #[test]
    fn swap_assisted_identity_simulation() {
        let spec = FreeSetSpec::mio(2, 2);
        // The input is parked in the ancilla while |0⟩ enters the channel slot.
        let park = linalg::kron(&ket(2, 0), &linalg::identity(2));
        let pre = Channel::kraus(2, 4, vec![park]).unwrap();
        let post = Channel::partial_trace_first(2, 2);
        let any = Channel::amplitude_damping(0.7);
        let r = verify_simulation(&any, &Channel::identity(2), &pre, &post, &spec, 0.0).unwrap();
        assert!(r.pre_free && r.post_free && r.passes, "{r:?}");
        assert!(r.distance < 1e-6);
    }

    #[test]
    fn non_free_pre_processing_fails_the_verdict() {
        let spec = FreeSetSpec::mio(2, 2);
        let h = Channel::unitary(&linalg::hadamard()).unwrap();
        let r = verify_simulation(&h, &h, &h, &Channel::identity(2), &spec, 1.0).unwrap();
        assert!(!r.pre_free && r.post_free && r.within_epsilon && !r.passes);
    }

    #[test]
    fn mismatched_chain_is_rejected() {
        let e = apply_superchannel(&Channel::identity(2), &Channel::identity(2), 2, &Channel::identity(2)).unwrap_err();
        assert!(matches!(e, Error::DimensionMismatch(_)));
    }
}
