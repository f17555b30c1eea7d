//! Majorization of probability vectors and the unitary simulation test built on it.

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

const DIST_TOL: f64 = 1e-9;

fn check_distribution(p: &[f64], name: &str) -> Result<()> {
    if p.is_empty() {
        return Err(Error::NotADistribution(format!("{name} is empty")));
    }
    if let Some(x) = p.iter().find(|x| !x.is_finite() || **x < -DIST_TOL) {
        return Err(Error::NotADistribution(format!("{name} has entry {x}")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > DIST_TOL {
        return Err(Error::NotADistribution(format!("{name} sums to {s}")));
    }
    Ok(())
}

/// True iff `p` majorizes `q`: every prefix sum of the descending
/// rearrangement of `p` dominates that of `q` (slack `1e-9`). Shorter
/// vectors are padded with zeros.
pub fn majorizes(p: &[f64], q: &[f64]) -> Result<bool> {
    check_distribution(p, "p")?;
    check_distribution(q, "q")?;
    let n = p.len().max(q.len());
    let sorted = |v: &[f64]| {
        let mut s: Vec<f64> = v.to_vec();
        s.resize(n, 0.0);
        s.sort_by(|a, b| b.total_cmp(a));
        s
    };
    let (ps, qs) = (sorted(p), sorted(q));
    let (mut sp, mut sq) = (0.0, 0.0);
    for k in 0..n {
        sp += ps[k];
        sq += qs[k];
        if sp < sq - DIST_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Necessary condition for simulating the unitary `v` from `u` with
/// incoherent pre/post-processing: for every row index `i`, the squared
/// moduli `(|u_i1|², …, |u_ik|²)` majorize `(|v_i1|², …, |v_ik|²)`.
pub fn io_unitary_necessary_condition(u: &CMat, v: &CMat) -> Result<bool> {
    if !u.is_square() || u.shape() != v.shape() {
        return Err(Error::dims("unitaries must be square and of equal size"));
    }
    for (name, m) in [("u", u), ("v", v)] {
        let deviation = linalg::unitarity_deviation(m);
        if deviation > crate::channel::VALIDITY_TOL {
            return Err(Error::InvalidParameter(format!("{name} is not unitary (deviation {deviation:.3e})")));
        }
    }
    for i in 0..u.nrows() {
        let row = |m: &CMat| (0..m.ncols()).map(|j| m[(i, j)].norm_sqr()).collect::<Vec<_>>();
        if !majorizes(&row(u), &row(v))? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert!(majorizes(&[1.0, 0.0], &[0.5, 0.5]).unwrap());
        assert!(!majorizes(&[0.5, 0.5], &[1.0, 0.0]).unwrap());
        assert!(majorizes(&[0.6, 0.4], &[0.5, 0.5]).unwrap());
        assert!(majorizes(&[1.0], &[0.25, 0.25, 0.5]).unwrap());
    }

    #[test]
    fn rejects_non_distributions() {
        assert!(matches!(majorizes(&[0.7, 0.7], &[0.5, 0.5]), Err(Error::NotADistribution(_))));
        assert!(matches!(majorizes(&[1.2, -0.2], &[0.5, 0.5]), Err(Error::NotADistribution(_))));
        assert!(matches!(majorizes(&[], &[1.0]), Err(Error::NotADistribution(_))));
    }

    #[test]
    fn unitary_condition() {
        let id = linalg::identity(2);
        let h = linalg::hadamard();
        assert!(io_unitary_necessary_condition(&h, &h).unwrap());
        assert!(io_unitary_necessary_condition(&id, &h).unwrap());
        assert!(!io_unitary_necessary_condition(&h, &id).unwrap());
        assert!(io_unitary_necessary_condition(&id, &linalg::identity(3)).is_err());
    }

    fn dist(len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, len).prop_filter("nonzero", |v| v.iter().sum::<f64>() > 1e-3).prop_map(|v| {
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect()
        })
    }

    proptest! {
        #[test]
        fn reflexive(p in dist(5)) {
            prop_assert!(majorizes(&p, &p).unwrap());
        }

        #[test]
        fn transitive(p in dist(4), q in dist(4), r in dist(4)) {
            if majorizes(&p, &q).unwrap() && majorizes(&q, &r).unwrap() {
                prop_assert!(majorizes(&p, &r).unwrap());
            }
        }

        #[test]
        fn point_mass_majorizes_everything(q in dist(6), k in 0usize..6) {
            let mut p = vec![0.0; 6];
            p[k] = 1.0;
            prop_assert!(majorizes(&p, &q).unwrap());
            prop_assert!(majorizes(&q, &[1.0 / 6.0; 6]).unwrap());
        }
    }
}
