//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the verdicts are always printed.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use chanres::free_sets::FreeSetSpec;
use chanres::linalg::{self, CMat};
use chanres::majorization::{io_unitary_necessary_condition, majorizes};
use chanres::monotones::{
    self, channel_dmax, channel_dmax_smooth, cq_asymptotic_cost, generating_power, i_max, increasing_power, mio_cost_bracket,
    monotone_suite, robustness, AscentOptions, SmoothParams, StateMonotone,
};
use chanres::norms::diamond_distance;
use chanres::protocols::{convex_split, erasure_protocol};
use chanres::{Channel, DensityMatrix, ExtReal};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn finite(x: ExtReal) -> Result<f64, String> {
    x.finite().ok_or_else(|| "unexpected +inf".to_owned())
}

fn err(e: chanres::Error) -> String {
    e.to_string()
}

/// Largest eigenvalue of `B^{-1/2} A B^{-1/2}` for positive definite `B`.
fn ratio_oracle(a: &CMat, b: &CMat) -> f64 {
    let eig = nalgebra::SymmetricEigen::new(b.clone());
    let inv_sqrt = CMat::from_diagonal(&eig.eigenvalues.map(|l| linalg::re(1.0 / l.sqrt())));
    let w = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.adjoint();
    let m = &w * a * &w;
    nalgebra::SymmetricEigen::new(linalg::hermitize(&m)).eigenvalues.max()
}

fn c1_dmax_constants() -> Outcome {
    let mut worst: f64 = 0.0;
    for d in [2usize, 3] {
        let id = Channel::identity(d);
        let replacer = Channel::constant(d, &DensityMatrix::maximally_mixed(d));
        let v = finite(channel_dmax(&id, &replacer).map_err(err)?)?;
        let oracle = ratio_oracle(id.choi(), replacer.choi()).log2();
        let expected = 2.0 * (d as f64).log2();
        ensure((oracle - expected).abs() < 1e-9, || format!("oracle gives {oracle} for d = {d}"))?;
        ensure((v - expected).abs() <= 1e-5, || format!("d = {d}: {v} vs {expected}"))?;
        worst = worst.max((v - expected).abs());
    }
    Ok(format!("max error {worst:.1e}"))
}

fn c2_imax_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let n = Channel::random(&mut rng, 2, 2);
        let im = i_max(&n).map_err(err)?;
        let lr = robustness(&n, &FreeSetSpec::constant(2, 2), None).map_err(err)?.log_robustness;
        ensure((im.value - lr).abs() <= 1e-5, || format!("channel {k}: I_max {} vs LR {lr}", im.value))?;
        worst = worst.max((im.value - lr).abs());
    }
    let id = i_max(&Channel::identity(2)).map_err(err)?.value;
    ensure((id - 2.0).abs() <= 1e-5, || format!("I_max(id) = {id}"))?;
    Ok(format!("max |I_max − LR| {worst:.1e}, I_max(id₂) = {id:.7}"))
}

/// Distance from 0 to the convex hull of unit-modulus eigenvalues.
fn hull_distance(phases: &mut [f64]) -> f64 {
    phases.sort_by(f64::total_cmp);
    let n = phases.len();
    let mut max_gap: f64 = 0.0;
    for i in 0..n {
        let next = if i + 1 < n { phases[i + 1] } else { phases[0] + 2.0 * PI };
        max_gap = max_gap.max(next - phases[i]);
    }
    let span = 2.0 * PI - max_gap;
    if span >= PI {
        0.0
    } else {
        (span / 2.0).cos()
    }
}

fn unitary_oracle(u: &CMat, v: &CMat) -> f64 {
    let w = u.adjoint() * v;
    let (_, t) = nalgebra::Schur::new(w).unpack();
    let mut phases: Vec<f64> = t.diagonal().iter().map(|z| z.arg()).collect();
    let nu = hull_distance(&mut phases);
    (1.0 - nu * nu).max(0.0).sqrt()
}

fn c3_diamond_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let d = if k % 2 == 0 { 2 } else { 3 };
        let u = linalg::random_unitary(&mut rng, d);
        let v = linalg::random_unitary(&mut rng, d);
        let sdp = diamond_distance(&Channel::unitary(&u).map_err(err)?, &Channel::unitary(&v).map_err(err)?).map_err(err)?;
        let oracle = unitary_oracle(&u, &v);
        ensure((sdp - oracle).abs() <= 1e-5, || format!("pair {k} (d = {d}): SDP {sdp} vs oracle {oracle}"))?;
        worst = worst.max((sdp - oracle).abs());
    }
    let z = diamond_distance(&Channel::identity(2), &Channel::unitary(&linalg::pauli_z()).map_err(err)?).map_err(err)?;
    ensure((z - 1.0).abs() <= 1e-6, || format!("id vs Z: {z}"))?;
    Ok(format!("max error {worst:.1e}, id vs Z = {z:.8}"))
}

fn c4_convex_split() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut runs = 0;
    let mut tightest = f64::INFINITY;
    for k in 0..20 {
        let alpha = Channel::constant(2, &DensityMatrix::random(&mut rng, 2));
        let beta = Channel::constant(2, &DensityMatrix::random(&mut rng, 2));
        for n in [2, 4, 8, 16] {
            let r = convex_split(&alpha, &beta, n).map_err(err)?;
            ensure(r.used_shortcut, || format!("pair {k}, n = {n}: shortcut not used"))?;
            ensure(r.measured_distance <= r.bound, || {
                format!("pair {k}, n = {n}: distance {} above bound {}", r.measured_distance, r.bound)
            })?;
            tightest = tightest.min(r.bound - r.measured_distance);
            runs += 1;
        }
        let same = convex_split(&beta, &beta, 8).map_err(err)?;
        ensure(same.measured_distance <= 1e-9, || format!("α = β gives {}", same.measured_distance))?;
    }
    let general = convex_split(&Channel::amplitude_damping(0.3), &Channel::depolarizing(2, 0.5), 3).map_err(err)?;
    ensure(!general.used_shortcut && general.gamma_dim == 64, || "general pair did not use the 64-dimensional SDP".into())?;
    ensure(general.measured_distance <= general.bound + 1e-6, || {
        format!("general pair: {} above {}", general.measured_distance, general.bound)
    })?;
    Ok(format!(
        "{runs} shortcut runs, 0 violations (min slack {tightest:.3}); general n = 3: {:.6} ≤ {:.6}",
        general.measured_distance, general.bound
    ))
}

fn c5_erasure() -> Outcome {
    let (eps, eta) = (0.6, 0.1);
    let mut cases: Vec<(String, Channel, FreeSetSpec)> = Vec::new();
    for p in [0.05f64, 0.1, 0.2, 0.3] {
        // |0⟩ carries energy 1 and τ = diag(p, 1 − p).
        let beta = ((1.0 - p) / p).ln();
        let spec = FreeSetSpec::gibbs(linalg::from_real_diag(&[1.0, 0.0]), beta).map_err(err)?;
        cases.push((format!("|0⟩ vs τ₀ = {p}"), Channel::constant(2, &DensityMatrix::basis(2, 0)), spec));
    }
    cases.push(("|0⟩, constant cone".into(), Channel::constant(2, &DensityMatrix::basis(2, 0)), FreeSetSpec::constant(2, 2)));
    cases.push(("|+⟩, MIO".into(), Channel::constant(2, &DensityMatrix::plus()), FreeSetSpec::mio(2, 2)));
    let mut summary = Vec::new();
    for (name, ch, spec) in &cases {
        let r = erasure_protocol(ch, spec, eps, eta).map_err(err)?;
        ensure(r.executed && r.used_shortcut, || format!("{name}: protocol not executed via the shortcut"))?;
        let achieved = r.achieved_distance.expect("executed");
        ensure(achieved <= eps + 1e-6, || format!("{name}: achieved {achieved}"))?;
        ensure(r.cost_bits <= r.lr_value + 2.0 * (1.0 / eta).log2() - 1.0 + 1.0, || {
            format!("{name}: cost {} vs LR {}", r.cost_bits, r.lr_value)
        })?;
        let delta = (eps * (2.0 - eps)).sqrt();
        ensure((r.lower_bound_info.delta - delta).abs() < 1e-12, || format!("{name}: δ = {}", r.lower_bound_info.delta))?;
        ensure(r.lower_bound_info.convex_value <= r.cost_bits + 1e-6, || {
            format!("{name}: LR^δ = {} above cost {}", r.lower_bound_info.convex_value, r.cost_bits)
        })?;
        summary.push(format!("n={} d={:.3}", r.n_used, achieved));
    }
    Ok(summary.join(", "))
}

fn c6_monotone_axioms() -> Outcome {
    let mut notes = Vec::new();
    for spec in [FreeSetSpec::mio(2, 2), FreeSetSpec::max_mixed_preserving(2, 2)] {
        let r = monotone_suite(&spec, 50, 6).map_err(err)?;
        for c in &r.checks {
            ensure(c.violations == 0, || format!("{}: {} violations of {} ({:?})", r.cone, c.violations, c.property, c.witness))?;
        }
        notes.push(format!("{} {} checks", r.cone, r.checks.iter().map(|c| c.evaluations).sum::<usize>()));
    }
    let opts = AscentOptions { starts: 6, ..AscentOptions::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(60);
    let mut channels = vec![Channel::unitary(&linalg::hadamard()).map_err(err)?, Channel::amplitude_damping(0.4)];
    channels.extend((0..3).map(|_| Channel::random(&mut rng, 2, 2)));
    let h = linalg::from_real_diag(&[0.0, 1.0]);
    let monotones = [StateMonotone::Coherence, StateMonotone::FreeEnergy { hamiltonian: h, beta: 1.0 }];
    let mut evaluations = 0;
    for (k, n) in channels.iter().enumerate() {
        for omega in &monotones {
            let gp = generating_power(n, omega, false, &opts).map_err(err)?.value;
            let gpc = generating_power(n, omega, true, &opts).map_err(err)?.value;
            let ip = increasing_power(n, omega, false, &opts).map_err(err)?.value;
            let ipc = increasing_power(n, omega, true, &opts).map_err(err)?.value;
            let slack = 1e-9;
            ensure(gp <= ip + slack && gpc <= ipc + slack, || format!("channel {k}, {}: Ω_gp above Ω_ip", omega.name()))?;
            ensure(gp <= gpc + slack && ip <= ipc + slack, || format!("channel {k}, {}: plain above complete", omega.name()))?;
            evaluations += 4;
        }
    }
    notes.push(format!("{evaluations} power evaluations ordered"));
    Ok(notes.join(", "))
}

fn c7_additivity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let [n1, n2, m1, m2] = std::array::from_fn(|_| Channel::random(&mut rng, 2, 2));
        let joint = finite(channel_dmax(&n1.tensor(&n2), &m1.tensor(&m2)).map_err(err)?)?;
        let sum = finite(channel_dmax(&n1, &m1).map_err(err)?)? + finite(channel_dmax(&n2, &m2).map_err(err)?)?;
        ensure((joint - sum).abs() <= 1e-7, || format!("tuple {k}: {joint} vs {sum}"))?;
        worst = worst.max((joint - sum).abs());
    }
    Ok(format!("max deviation {worst:.1e}"))
}

fn binary_entropy(p: f64) -> f64 {
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

fn c8_mio_bracket() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut widest: f64 = 0.0;
    for k in 0..20 {
        let n = Channel::random(&mut rng, 2, 2);
        for eps in [0.0, 0.05] {
            let b = mio_cost_bracket(&n, eps).map_err(err)?;
            ensure(b.lower <= b.upper + 1e-9, || format!("channel {k}, ε = {eps}: {} > {}", b.lower, b.upper))?;
            ensure(b.upper - b.lower <= 1.0 + 1e-9, || format!("channel {k}, ε = {eps}: gap {}", b.upper - b.lower))?;
            widest = widest.max(b.upper - b.lower);
        }
    }
    // C_r of [[1/2, c], [c, 1/2]] is 1 − h(1/2 + c).
    let partial = DensityMatrix::new(linalg::real_matrix(2, &[0.5, 0.25, 0.25, 0.5])).map_err(err)?;
    let cases: Vec<(Vec<DensityMatrix>, f64)> = vec![
        (vec![DensityMatrix::plus(), DensityMatrix::basis(2, 0)], 1.0),
        (vec![DensityMatrix::basis(2, 1), partial.clone()], 1.0 - binary_entropy(0.75)),
        (vec![DensityMatrix::maximally_mixed(2), DensityMatrix::basis(2, 0)], 0.0),
    ];
    for (states, expected) in cases {
        let v = cq_asymptotic_cost(&Channel::cq(&states).map_err(err)?).map_err(err)?;
        ensure((v - expected).abs() <= 1e-8, || format!("cq cost {v} vs {expected}"))?;
    }
    Ok(format!("widest gap {widest:.3} bits, cq costs exact"))
}

/// `p ≻ q` iff every prefix sum of `p` sorted decreasingly dominates the
/// corresponding prefix sum of `q`.
fn majorization_oracle(p: &[f64], q: &[f64]) -> bool {
    let prefix = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(|a, b| b.total_cmp(a));
        s.iter()
            .scan(0.0, |acc, x| {
                *acc += x;
                Some(*acc)
            })
            .collect::<Vec<f64>>()
    };
    prefix(p).iter().zip(prefix(q)).all(|(a, b)| *a >= b - 1e-9)
}

fn random_distribution(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>().powi(3)).collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

fn c9_majorization() -> Outcome {
    let (id, h) = (linalg::identity(2), linalg::hadamard());
    ensure(io_unitary_necessary_condition(&id, &h).map_err(err)?, || "I → H rejected".into())?;
    ensure(!io_unitary_necessary_condition(&h, &id).map_err(err)?, || "H → I accepted".into())?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut positives = 0;
    for k in 0..100 {
        let n = 2 + k % 4;
        let p = random_distribution(&mut rng, n);
        let q = if k % 2 == 0 {
            // a doubly stochastic image of p is always majorized by it
            let t: f64 = rng.random();
            let mut q = p.clone();
            let (i, j) = (0, n - 1);
            q[i] = t * p[i] + (1.0 - t) * p[j];
            q[j] = (1.0 - t) * p[i] + t * p[j];
            q
        } else {
            random_distribution(&mut rng, n)
        };
        let got = majorizes(&p, &q).map_err(err)?;
        ensure(got == majorization_oracle(&p, &q), || format!("pair {k}: {p:?} vs {q:?}"))?;
        positives += got as usize;
    }
    Ok(format!("100 pairs agree ({positives} majorizing)"))
}

fn c10_smoothing() -> Outcome {
    let grid = [0.0, 0.05, 0.1, 0.2];
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let spec = FreeSetSpec::mio(2, 2);
    for k in 0..10 {
        let n = Channel::random(&mut rng, 2, 2);
        let m = Channel::random(&mut rng, 2, 2);
        let plain_dmax = finite(channel_dmax(&n, &m).map_err(err)?)?;
        let plain_lr = robustness(&n, &spec, None).map_err(err)?.log_robustness;
        let (mut prev_d, mut prev_lr) = (f64::INFINITY, f64::INFINITY);
        for eps in grid {
            let params = SmoothParams::new(eps).map_err(err)?;
            let d = finite(channel_dmax_smooth(&n, &m, &params).map_err(err)?.value)?;
            let lr = monotones::robustness(&n, &spec, Some(&params)).map_err(err)?.log_robustness;
            if eps == 0.0 {
                ensure((d - plain_dmax).abs() <= 1e-6, || format!("channel {k}: smoothed D_max at 0 is {d}, plain {plain_dmax}"))?;
                ensure((lr - plain_lr).abs() <= 1e-6, || format!("channel {k}: smoothed LR at 0 is {lr}, plain {plain_lr}"))?;
            }
            ensure(d <= prev_d + 1e-6, || format!("channel {k}: D_max increases at ε = {eps}"))?;
            ensure(lr <= prev_lr + 1e-6, || format!("channel {k}: LR increases at ε = {eps}"))?;
            prev_d = d;
            prev_lr = lr;
        }
    }
    Ok("10 channels nonincreasing on the grid".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("D_max constants", c1_dmax_constants),
        ("I_max consistency", c2_imax_consistency),
        ("diamond-norm oracle", c3_diamond_oracle),
        ("convex-split bound", c4_convex_split),
        ("erasure protocol", c5_erasure),
        ("monotone axioms", c6_monotone_axioms),
        ("D_max additivity", c7_additivity),
        ("MIO bracket", c8_mio_bracket),
        ("majorization checks", c9_majorization),
        ("smoothing sanity", c10_smoothing),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let label = format!("criterion {:>2}: {name}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| label.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {label} ({secs:.1}s) — {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {label} ({secs:.1}s) — {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
