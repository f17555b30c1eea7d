//! Heuristic (uncertified) optimisation over input states: the channel
//! relative entropy and the increasing / generating powers.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use super::ascent::{maximize_on_sphere, AscentOptions};
use crate::channel::{Channel, DensityMatrix};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::states::{self, psd_relative_entropy, ExtReal};

fn complex_vector(x: &[f64]) -> Vec<Complex64> {
    x.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect()
}

fn real_coordinates(v: &[Complex64]) -> Vec<f64> {
    v.iter().flat_map(|z| [z.re, z.im]).collect()
}

/// `M M† / tr(M M†)` for `M` with entries `x` (column major, `d × d`).
fn mixed_state(x: &[f64], d: usize) -> CMat {
    let m = CMat::from_column_slice(d, d, &complex_vector(x));
    let rho = &m * m.adjoint();
    let tr = linalg::trace(&rho).re;
    linalg::hermitize(&(rho / linalg::re(tr)))
}

/// Coordinates of `√ρ`, a preimage of `ρ` under [`mixed_state`].
fn mixed_coordinates(rho: &CMat) -> Vec<f64> {
    let root = linalg::spectral_map(rho, |l| l.max(0.0).sqrt());
    real_coordinates(root.as_slice())
}

fn pure_state(x: &[f64]) -> CMat {
    let v = complex_vector(x);
    let n: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    linalg::outer(&v) / linalg::re(n)
}

/// `diag(x²) / |x|²`.
fn diagonal_state(x: &[f64]) -> CMat {
    let n: f64 = x.iter().map(|v| v * v).sum();
    linalg::from_real_diag(&x.iter().map(|v| v * v / n).collect::<Vec<_>>())
}

#[derive(Clone, Debug, Serialize)]
pub struct RelEntResult {
    /// Best value found, in bits; a lower bound on the channel relative entropy.
    pub value: ExtReal,
    /// Input state on system ⊗ reference attaining `value`.
    pub input: DensityMatrix,
    pub certified: bool,
    pub dmax: ExtReal,
    /// Whether `value ≤ dmax + 1e-6`.
    pub below_dmax: bool,
}

/// Lower bound on `sup_ψ D((n⊗id)ψ ‖ (m⊗id)ψ)` over pure inputs with a
/// reference of dimension `d_in`, by multi-start gradient ascent. The first
/// start is the maximally entangled state.
pub fn channel_rel_ent(n: &Channel, m: &Channel, opts: &AscentOptions) -> Result<RelEntResult> {
    if n.dim_in() != m.dim_in() || n.dim_out() != m.dim_out() {
        return Err(Error::dims("channel relative entropy needs channels of equal dimensions"));
    }
    let d = n.dim_in();
    let dmax = super::channel_dmax(n, m)?;
    let phi = linalg::max_entangled_projector(d) / linalg::re(d as f64);
    // Every pure input is (I ⊗ X)|Φ⟩, so the support condition is decided at Φ.
    if psd_relative_entropy(&n.apply_extended(&phi, d)?, &m.apply_extended(&phi, d)?)?.is_infinite() {
        return Ok(RelEntResult {
            value: ExtReal::Infinite,
            input: DensityMatrix::from_trusted(phi),
            certified: false,
            dmax,
            below_dmax: dmax.is_infinite(),
        });
    }
    let objective = |x: &[f64]| -> f64 {
        let rho = pure_state(x);
        let (Ok(a), Ok(b)) = (n.apply_extended(&rho, d), m.apply_extended(&rho, d)) else {
            return f64::NEG_INFINITY;
        };
        match psd_relative_entropy(&a, &b) {
            Ok(ExtReal::Finite(v)) => v,
            _ => f64::NEG_INFINITY,
        }
    };
    let mut start = vec![Complex64::new(0.0, 0.0); d * d];
    for i in 0..d {
        start[i * d + i] = Complex64::new(1.0, 0.0);
    }
    let best = maximize_on_sphere(&objective, 2 * d * d, vec![real_coordinates(&start)], opts);
    let value = best.value.max(0.0);
    let below_dmax = match dmax {
        ExtReal::Finite(v) => value <= v + 1e-6,
        ExtReal::Infinite => true,
    };
    Ok(RelEntResult {
        value: ExtReal::Finite(value),
        input: DensityMatrix::from_trusted(pure_state(&best.point)),
        certified: false,
        dmax,
        below_dmax,
    })
}

/// A resource monotone on states, vanishing on free states.
#[derive(Clone)]
pub enum StateMonotone {
    /// Relative entropy of coherence in the computational basis (bits).
    Coherence,
    /// `F(ρ) − F(τ)` with `F(ρ) = tr(ρH) − S(ρ)/β` in nats.
    FreeEnergy { hamiltonian: CMat, beta: f64 },
    /// A user-supplied monotone together with the free states used by the
    /// generating power.
    Custom { name: String, f: Arc<dyn Fn(&DensityMatrix) -> f64 + Send + Sync>, free_states: Vec<DensityMatrix> },
}

impl fmt::Debug for StateMonotone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl StateMonotone {
    pub fn name(&self) -> &str {
        match self {
            Self::Coherence => "coherence",
            Self::FreeEnergy { .. } => "free_energy",
            Self::Custom { name, .. } => name,
        }
    }

    /// Value on a state of the system, or of system ⊗ ancilla when
    /// `ancilla > 1` (the ancilla carries no coherence cost and a trivial
    /// Hamiltonian).
    fn eval(&self, rho: &CMat, ancilla: usize) -> Result<f64> {
        let state = DensityMatrix::from_trusted(rho.clone());
        match self {
            Self::Coherence => states::coherence_rel_ent(&state, None),
            Self::FreeEnergy { hamiltonian, beta } => {
                let h = linalg::kron(hamiltonian, &linalg::identity(ancilla));
                let tau = DensityMatrix::from_trusted(linalg::gibbs_state(&h, *beta));
                Ok(states::free_energy(&state, &h, *beta)? - states::free_energy(&tau, &h, *beta)?)
            }
            Self::Custom { f, .. } => {
                if ancilla > 1 {
                    return Err(Error::UnsupportedMonotone("custom monotones have no complete version".into()));
                }
                Ok(f(&state))
            }
        }
    }

    fn check_dims(&self, n: &Channel) -> Result<()> {
        if let Self::FreeEnergy { hamiltonian, beta } = self {
            if n.dim_in() != n.dim_out() || hamiltonian.nrows() != n.dim_in() {
                return Err(Error::dims(format!(
                    "free-energy monotone with a {}-level Hamiltonian on a {}→{} channel",
                    hamiltonian.nrows(),
                    n.dim_in(),
                    n.dim_out()
                )));
            }
            if !(beta.is_finite() && *beta > 0.0) {
                return Err(Error::InvalidParameter(format!("inverse temperature {beta}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PowerResult {
    pub value: f64,
    pub maximizing_state: DensityMatrix,
    pub ancilla_dim_used: usize,
    /// Always false: the value is the best found by a local search.
    pub certified: bool,
}

fn power_objective<'a>(n: &'a Channel, omega: &'a StateMonotone, ancilla: usize, subtract_input: bool) -> impl Fn(&CMat) -> f64 + 'a {
    move |rho: &CMat| {
        let out = if ancilla > 1 { n.apply_extended(rho, ancilla) } else { n.apply_matrix(rho) };
        let Ok(out) = out else { return f64::NEG_INFINITY };
        let gain = omega.eval(&out, ancilla).unwrap_or(f64::NEG_INFINITY);
        if subtract_input {
            gain - omega.eval(rho, ancilla).unwrap_or(f64::INFINITY)
        } else {
            gain
        }
    }
}

fn embed_with_ancilla(rho: &CMat, ancilla: usize) -> CMat {
    linalg::kron(rho, &linalg::basis_projector(ancilla, 0))
}

/// Best free input for the generating power, with its value.
fn best_free_input(n: &Channel, omega: &StateMonotone, ancilla: usize, opts: &AscentOptions) -> Result<(f64, CMat)> {
    let d = n.dim_in() * ancilla;
    let eval = power_objective(n, omega, ancilla, false);
    match omega {
        StateMonotone::Coherence => {
            let f = |x: &[f64]| eval(&diagonal_state(x));
            let mut initial: Vec<Vec<f64>> = (0..d)
                .map(|i| {
                    let mut e = vec![0.0; d];
                    e[i] = 1.0;
                    e
                })
                .collect();
            initial.push(vec![1.0; d]);
            let best = maximize_on_sphere(&f, d, initial, opts);
            Ok((best.value, diagonal_state(&best.point)))
        }
        StateMonotone::FreeEnergy { hamiltonian, beta } => {
            let tau = linalg::kron(&linalg::gibbs_state(hamiltonian, *beta), &(linalg::identity(ancilla) / linalg::re(ancilla as f64)));
            Ok((eval(&tau), tau))
        }
        StateMonotone::Custom { free_states, .. } => {
            if ancilla > 1 {
                return Err(Error::UnsupportedMonotone("custom monotones have no complete version".into()));
            }
            let mut best: Option<(f64, CMat)> = None;
            for s in free_states {
                if s.dim() != n.dim_in() {
                    return Err(Error::dims("custom free state does not match the channel input"));
                }
                let v = eval(s.matrix());
                if best.as_ref().is_none_or(|b| v > b.0) {
                    best = Some((v, s.matrix().clone()));
                }
            }
            best.ok_or_else(|| Error::UnsupportedMonotone("custom monotone lists no free states".into()))
        }
    }
}

fn ancilla_for(n: &Channel, complete: bool) -> usize {
    if complete {
        n.dim_in()
    } else {
        1
    }
}

/// `sup_{ρ free} Ω(N(ρ))`, or its complete version with an ancilla of
/// dimension `d_in`. For coherence the complete search also starts from the
/// plain optimum tensored with `|0⟩⟨0|`, so the complete value is never
/// below the plain one.
pub fn generating_power(n: &Channel, omega: &StateMonotone, complete: bool, opts: &AscentOptions) -> Result<PowerResult> {
    omega.check_dims(n)?;
    let ancilla = ancilla_for(n, complete);
    let (mut value, mut state) = best_free_input(n, omega, ancilla, opts)?;
    // With a Hamiltonian the only free input is the Gibbs state, already used.
    if complete && matches!(omega, StateMonotone::Coherence) {
        let plain = generating_power(n, omega, false, opts)?;
        let lifted = embed_with_ancilla(plain.maximizing_state.matrix(), ancilla);
        let v = power_objective(n, omega, ancilla, false)(&lifted);
        if v > value {
            value = v;
            state = lifted;
        }
    }
    Ok(PowerResult { value, maximizing_state: DensityMatrix::from_trusted(state), ancilla_dim_used: ancilla, certified: false })
}

/// `sup_ρ Ω(N(ρ)) − Ω(ρ)` over mixed inputs (parametrised by a square root),
/// or its complete version. Searches start from the generating-power
/// optimum, and for the complete version also from the lifted plain optimum.
pub fn increasing_power(n: &Channel, omega: &StateMonotone, complete: bool, opts: &AscentOptions) -> Result<PowerResult> {
    omega.check_dims(n)?;
    if complete && matches!(omega, StateMonotone::Custom { .. }) {
        return Err(Error::UnsupportedMonotone("custom monotones have no complete version".into()));
    }
    let ancilla = ancilla_for(n, complete);
    let d = n.dim_in() * ancilla;
    let eval = power_objective(n, omega, ancilla, true);
    let f = |x: &[f64]| eval(&mixed_state(x, d));

    let mut initial = Vec::new();
    if let Ok(gp) = generating_power(n, omega, complete, opts) {
        initial.push(mixed_coordinates(gp.maximizing_state.matrix()));
    }
    if complete {
        let plain = increasing_power(n, omega, false, opts)?;
        initial.push(mixed_coordinates(&embed_with_ancilla(plain.maximizing_state.matrix(), ancilla)));
    }
    let best = maximize_on_sphere(&f, 2 * d * d, initial, opts);
    let state = mixed_state(&best.point, d);
    Ok(PowerResult {
        value: eval(&state),
        maximizing_state: DensityMatrix::from_trusted(state),
        ancilla_dim_used: ancilla,
        certified: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{from_real_diag, hadamard};

    fn quick() -> AscentOptions {
        AscentOptions { starts: 4, ..Default::default() }
    }

    #[test]
    fn rel_ent_identity_versus_replacer() {
        let id = Channel::identity(2);
        let c = Channel::constant(2, &DensityMatrix::maximally_mixed(2));
        let r = channel_rel_ent(&id, &c, &quick()).unwrap();
        assert!((r.value.finite().unwrap() - 2.0).abs() < 1e-6);
        assert!(r.below_dmax);
    }

    #[test]
    fn rel_ent_of_equal_channels_vanishes() {
        let ch = Channel::amplitude_damping(0.4);
        let r = channel_rel_ent(&ch, &ch, &quick()).unwrap();
        assert!(r.value.finite().unwrap() < 1e-9);
    }

    #[test]
    fn rel_ent_support_violation() {
        let a = Channel::constant(2, &DensityMatrix::basis(2, 0));
        let b = Channel::constant(2, &DensityMatrix::basis(2, 1));
        assert!(channel_rel_ent(&a, &b, &quick()).unwrap().value.is_infinite());
    }

    #[test]
    fn identity_has_no_power() {
        let id = Channel::identity(2);
        let h = from_real_diag(&[0.0, 1.0]);
        for omega in [StateMonotone::Coherence, StateMonotone::FreeEnergy { hamiltonian: h, beta: 1.0 }] {
            for complete in [false, true] {
                assert!(increasing_power(&id, &omega, complete, &quick()).unwrap().value.abs() < 1e-6);
                assert!(generating_power(&id, &omega, complete, &quick()).unwrap().value.abs() < 1e-6);
            }
        }
    }

    #[test]
    fn hadamard_generates_one_bit() {
        let h = Channel::unitary(&hadamard()).unwrap();
        let gp = generating_power(&h, &StateMonotone::Coherence, false, &quick()).unwrap();
        assert!((gp.value - 1.0).abs() < 1e-6);
        let ip = increasing_power(&h, &StateMonotone::Coherence, false, &quick()).unwrap();
        assert!(ip.value >= gp.value - 1e-9);
    }

    #[test]
    fn thermalisation_cannot_increase_free_energy() {
        let h = from_real_diag(&[0.0, 1.0]);
        let tau = DensityMatrix::from_trusted(linalg::gibbs_state(&h, 2.0));
        let ch = Channel::constant(2, &tau);
        let omega = StateMonotone::FreeEnergy { hamiltonian: h, beta: 2.0 };
        let ip = increasing_power(&ch, &omega, false, &quick()).unwrap();
        assert!(ip.value.abs() < 1e-6, "{}", ip.value);
    }

    #[test]
    fn custom_monotone_has_no_complete_version() {
        let omega = StateMonotone::Custom {
            name: "purity".into(),
            f: Arc::new(|r: &DensityMatrix| linalg::trace_product_re(r.matrix(), r.matrix()) - 0.5),
            free_states: vec![DensityMatrix::maximally_mixed(2)],
        };
        let ch = Channel::amplitude_damping(0.5);
        assert!(matches!(increasing_power(&ch, &omega, true, &quick()), Err(Error::UnsupportedMonotone(_))));
        let gp = generating_power(&ch, &omega, false, &quick()).unwrap();
        assert!(gp.value > 0.0);
    }
}
