//! Amplitude (reshaped) and intensity losses with their update directions,
//! evaluated over a contiguous sample range.
//!
//! Each gradient is one fused pass over the rows: `u_i = ⟨a_i, z⟩`, then the
//! residual-weighted row is accumulated into the gradient while the row is
//! still hot in cache.

use std::ops::Range;

use crate::ensemble::{Measurements, SignalVector};
use crate::error::{param, Error, Result};
use crate::linalg;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct GradientResult<T> {
    pub gradient: Vec<T>,
    /// Loss at the evaluation point over the same subset.
    pub loss: T,
    /// Samples with `⟨a_i, z⟩ == 0` exactly; their contribution is zero.
    pub zero_crossings: usize,
}

/// Sign with `σ(0) = 0`.
#[inline]
pub fn sign0<T: Scalar>(t: T) -> T {
    if t > T::zero() {
        T::one()
    } else if t < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

fn check<T: Scalar, M: Measurements<T> + ?Sized>(
    ens: &M,
    subset: &Range<usize>,
    z: &[T],
) -> Result<()> {
    if subset.is_empty() {
        return param("sample subset must be nonempty");
    }
    if subset.end > ens.len() {
        return param(format!(
            "subset {:?} exceeds sample count {}",
            subset,
            ens.len()
        ));
    }
    if z.len() != ens.dim() {
        return param(format!(
            "iterate dimension {} does not match ensemble dimension {}",
            z.len(),
            ens.dim()
        ));
    }
    if !ens.is_observed() {
        return Err(Error::State("ensemble has no observations".into()));
    }
    if !linalg::all_finite(z) {
        return param("iterate has non-finite entries");
    }
    Ok(())
}

/// `(1/2|S|) Σ_{i∈S} (|⟨a_i,z⟩| − y_i)²`
pub fn rwf_loss<T: Scalar, M: Measurements<T> + ?Sized>(
    ens: &M,
    subset: Range<usize>,
    z: &SignalVector<T>,
) -> Result<T> {
    rwf_loss_slice(ens, subset, z.as_slice())
}

pub fn rwf_loss_slice<T: Scalar, M: Measurements<T> + ?Sized>(
    ens: &M,
    subset: Range<usize>,
    z: &[T],
) -> Result<T> {
    check(ens, &subset, z)?;
    let count = T::lit(subset.len() as f64);
    let mut acc = T::zero();
    for i in subset {
        let (a, y) = ens.sample(i);
        let r = linalg::dot(a, z).abs() - y;
        acc += r * r;
    }
    Ok(acc / (T::lit(2.0) * count))
}

/// `(1/|S|) Σ (|⟨a_i,z⟩| − y_i) σ(⟨a_i,z⟩) a_i` with `σ(0) = 0`.
pub fn rwf_gradient<T: Scalar, M: Measurements<T> + ?Sized>(
    ens: &M,
    subset: Range<usize>,
    z: &SignalVector<T>,
) -> Result<GradientResult<T>> {
    rwf_gradient_slice(ens, subset, z.as_slice())
}

pub fn rwf_gradient_slice<T: Scalar, M: Measurements<T> + ?Sized>(
    ens: &M,
    subset: Range<usize>,
    z: &[T],
) -> Result<GradientResult<T>> {
    check(ens, &subset, z)?;
    let count = T::lit(subset.len() as f64);
    let mut gradient = vec![T::zero(); z.len()];
    let mut loss = T::zero();
    let mut zero_crossings = 0;
    for i in subset {
        let (a, y) = ens.sample(i);
        let u = linalg::dot(a, z);
        let r = u.abs() - y;
        loss += r * r;
        // literal equality: σ(0) = 0 is a measure-zero convention
        if u == T::zero() {
            zero_crossings += 1;
            continue;
        }
        linalg::axpy(r * sign0(u), a, &mut gradient);
    }
    linalg::scale(T::one() / count, &mut gradient);
    Ok(GradientResult {
        gradient,
        loss: loss / (T::lit(2.0) * count),
        zero_crossings,
    })
}

/// `(1/4|S|) Σ (⟨a_i,z⟩² − y_i²)²`
pub fn wf_loss<T: Scalar, M: Measurements<T> + ?Sized>(
    ens: &M,
    subset: Range<usize>,
    z: &SignalVector<T>,
) -> Result<T> {
    wf_loss_slice(ens, subset, z.as_slice())
}

pub fn wf_loss_slice<T: Scalar, M: Measurements<T> + ?Sized>(
    ens: &M,
    subset: Range<usize>,
    z: &[T],
) -> Result<T> {
    check(ens, &subset, z)?;
    let count = T::lit(subset.len() as f64);
    let mut acc = T::zero();
    for i in subset {
        let (a, y) = ens.sample(i);
        let u = linalg::dot(a, z);
        let r = u * u - y * y;
        acc += r * r;
    }
    Ok(acc / (T::lit(4.0) * count))
}

/// `(1/|S|) Σ (⟨a_i,z⟩² − y_i²) ⟨a_i,z⟩ a_i`
pub fn wf_gradient<T: Scalar, M: Measurements<T> + ?Sized>(
    ens: &M,
    subset: Range<usize>,
    z: &SignalVector<T>,
) -> Result<GradientResult<T>> {
    wf_gradient_slice(ens, subset, z.as_slice())
}

pub fn wf_gradient_slice<T: Scalar, M: Measurements<T> + ?Sized>(
    ens: &M,
    subset: Range<usize>,
    z: &[T],
) -> Result<GradientResult<T>> {
    check(ens, &subset, z)?;
    let count = T::lit(subset.len() as f64);
    let mut gradient = vec![T::zero(); z.len()];
    let mut loss = T::zero();
    for i in subset {
        let (a, y) = ens.sample(i);
        let u = linalg::dot(a, z);
        let r = u * u - y * y;
        loss += r * r;
        linalg::axpy(r * u, a, &mut gradient);
    }
    linalg::scale(T::one() / count, &mut gradient);
    Ok(GradientResult {
        gradient,
        loss: loss / (T::lit(4.0) * count),
        zero_crossings: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{generate_gaussian_ensemble, partition_blocks, MeasurementSet};

    fn single(a: [f64; 2], y: f64) -> MeasurementSet<f64> {
        // observe with a signal that reproduces y along a
        let e = MeasurementSet::from_rows(2, a.to_vec()).unwrap();
        let scale = y / (a[0] * a[0] + a[1] * a[1]);
        let x = SignalVector::from_f64(&[a[0] * scale, a[1] * scale]).unwrap();
        e.observe(&x).unwrap()
    }

    fn sv(v: &[f64]) -> SignalVector<f64> {
        SignalVector::from_f64(v).unwrap()
    }

    fn random_problem(n: usize, m: usize, seed: u64) -> (MeasurementSet<f64>, SignalVector<f64>) {
        let x = SignalVector::random_unit(n, seed ^ 0xabc).unwrap();
        let e = generate_gaussian_ensemble(n, m, seed).unwrap().observe(&x).unwrap();
        (e, x)
    }

    #[test]
    fn rwf_loss_examples() {
        let (e, x) = random_problem(5, 30, 1);
        assert_eq!(rwf_loss(&e, 0..30, &x).unwrap(), 0.0);
        assert_eq!(rwf_loss(&e, 0..30, &x.negated()).unwrap(), 0.0);
        let e = single([1.0, 0.0], 1.0);
        assert_eq!(rwf_loss(&e, 0..1, &sv(&[3.0, 0.0])).unwrap(), 2.0);
        assert!(matches!(rwf_loss(&e, 0..0, &sv(&[3.0, 0.0])), Err(Error::Parameter(_))));
    }

    #[test]
    fn rwf_gradient_examples() {
        let e = single([1.0, 0.0], 1.0);
        let g = rwf_gradient(&e, 0..1, &sv(&[2.0, 0.0])).unwrap();
        assert_eq!(g.gradient, vec![1.0, 0.0]);
        assert_eq!(g.zero_crossings, 0);
        let g = rwf_gradient(&e, 0..1, &sv(&[0.0, 5.0])).unwrap();
        assert_eq!(g.gradient, vec![0.0, 0.0]);
        assert_eq!(g.zero_crossings, 1);
    }

    #[test]
    fn unobserved_ensemble_is_state_error() {
        let e = generate_gaussian_ensemble::<f64>(3, 5, 1).unwrap();
        let z = SignalVector::from_f64(&[1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(rwf_gradient(&e, 0..5, &z), Err(Error::State(_))));
    }

    #[test]
    fn non_finite_iterate_rejected() {
        let (e, _) = random_problem(3, 5, 1);
        assert!(rwf_gradient_slice(&e, 0..5, &[f64::NAN, 0.0, 1.0]).is_err());
        assert!(wf_gradient_slice(&e, 0..5, &[f64::INFINITY, 0.0, 1.0]).is_err());
    }

    #[test]
    fn wf_examples() {
        let (e, x) = random_problem(5, 30, 2);
        assert_eq!(wf_loss(&e, 0..30, &x).unwrap(), 0.0);
        let z = SignalVector::random_unit(5, 77).unwrap();
        assert_eq!(wf_loss(&e, 0..30, &z).unwrap(), wf_loss(&e, 0..30, &z.negated()).unwrap());
        let zero = wf_gradient_slice(&e, 0..30, &[0.0; 5]).unwrap();
        assert!(zero.gradient.iter().all(|&v| v == 0.0));

        let e = single([1.0, 0.0], 1.0);
        assert_eq!(wf_loss(&e, 0..1, &sv(&[2.0, 0.0])).unwrap(), 2.25);
        assert_eq!(wf_gradient(&e, 0..1, &sv(&[2.0, 0.0])).unwrap().gradient, vec![6.0, 0.0]);
    }

    #[test]
    fn gradients_vanish_at_truth_and_are_odd() {
        for seed in 0..20 {
            let (e, x) = random_problem(6, 60, seed);
            for t in [&x, &x.negated()] {
                let g = rwf_gradient(&e, 0..60, t).unwrap();
                assert!(linalg::norm(&g.gradient) < 1e-12);
            }
            let z = SignalVector::random_unit(6, seed + 100).unwrap();
            let g = rwf_gradient(&e, 0..60, &z).unwrap();
            let gn = rwf_gradient(&e, 0..60, &z.negated()).unwrap();
            assert!(g.gradient.iter().zip(&gn.gradient).all(|(a, b)| *a == -*b));
            let w = wf_gradient(&e, 0..60, &z).unwrap();
            let wn = wf_gradient(&e, 0..60, &z.negated()).unwrap();
            assert!(w.gradient.iter().zip(&wn.gradient).all(|(a, b)| *a == -*b));
        }
    }

    #[test]
    fn full_gradient_is_block_weighted_average() {
        let (e, _) = random_problem(7, 103, 5);
        let z = SignalVector::random_unit(7, 6).unwrap();
        let full = rwf_gradient(&e, 0..103, &z).unwrap().gradient;
        let sched = partition_blocks(103, 4).unwrap();
        let mut avg = vec![0.0; 7];
        for b in sched.blocks() {
            let g = rwf_gradient(&e, b.clone(), &z).unwrap().gradient;
            linalg::axpy(b.len() as f64 / 103.0, &g, &mut avg);
        }
        for (a, b) in full.iter().zip(&avg) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
