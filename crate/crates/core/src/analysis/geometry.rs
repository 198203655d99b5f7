//! Iterate geometry relative to the ground truth, and the population
//! (infinite-sample) update direction with its Monte-Carlo check.

use std::f64::consts::FRAC_PI_2;
use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::ensemble::SignalVector;
use crate::error::{param, Result};
use crate::linalg;
use crate::objective::sign0;
use crate::rng;
use crate::Scalar;

/// Split of `z` along `x` and its orthogonal complement, in units of ‖x‖.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    /// `⟨z, x⟩ / ‖x‖²`
    pub alpha: f64,
    /// `‖z − alpha·x‖ / ‖x‖`
    pub beta: f64,
    /// `‖z‖ / ‖x‖`
    pub r: f64,
    /// `arctan(|alpha| / beta)`, `π/2` when `beta = 0`.
    pub omega: f64,
    /// Unsigned angle between `z` and `±x`, in `[0, π/2]`.
    pub theta: f64,
}

pub fn decompose<T: Scalar>(z: &SignalVector<T>, x: &SignalVector<T>) -> Result<Decomposition> {
    decompose_slice(z.as_slice(), x.as_slice())
}

pub fn decompose_slice<T: Scalar>(z: &[T], x: &[T]) -> Result<Decomposition> {
    if z.len() != x.len() {
        return param("dimension mismatch in decompose");
    }
    let xx = linalg::dot(x, x).as_f64();
    if xx == 0.0 {
        return param("ground truth must be nonzero");
    }
    let xn = xx.sqrt();
    let zx = linalg::dot(z, x).as_f64();
    let alpha = zx / xx;
    let mut perp = 0.0;
    for (&zi, &xi) in z.iter().zip(x) {
        let d = zi.as_f64() - alpha * xi.as_f64();
        perp += d * d;
    }
    let beta = perp.sqrt() / xn;
    let zn = linalg::norm(z).as_f64();
    let r = zn / xn;
    let omega = alpha.abs().atan2(beta);
    let theta = if zn == 0.0 {
        FRAC_PI_2
    } else {
        (zx.abs() / (zn * xn)).clamp(-1.0, 1.0).acos()
    };
    Ok(Decomposition {
        alpha,
        beta,
        r,
        omega,
        theta,
    })
}

/// `min(‖z − x‖, ‖z + x‖)`
pub fn dist<T: Scalar>(z: &SignalVector<T>, x: &SignalVector<T>) -> Result<T> {
    dist_slice(z.as_slice(), x.as_slice())
}

pub fn dist_slice<T: Scalar>(z: &[T], x: &[T]) -> Result<T> {
    if z.len() != x.len() {
        return param("dimension mismatch in dist");
    }
    Ok(linalg::distance(z, x).min(linalg::distance_to_negated(z, x)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedUpdate<T> {
    /// `E[σ(aᵀz)|aᵀx| a] = (1 − 2θ/π) x + (2 sin θ / π) ‖x‖ z/‖z‖`
    pub mean: Vec<T>,
    /// `∇F(z) = z − mean`
    pub population_gradient: Vec<T>,
    /// Signed angle between `z` and `x`, in `[0, π]`.
    pub theta: f64,
}

/// Closed-form Gaussian expectation of the reshaped update direction.
pub fn expected_update<T: Scalar>(
    z: &SignalVector<T>,
    x: &SignalVector<T>,
) -> Result<ExpectedUpdate<T>> {
    let (zs, xs) = (z.as_slice(), x.as_slice());
    if zs.len() != xs.len() {
        return param("dimension mismatch in expected_update");
    }
    let zn = linalg::norm(zs).as_f64();
    let xn = linalg::norm(xs).as_f64();
    if zn == 0.0 || xn == 0.0 {
        return param("angle undefined for a zero vector");
    }
    let cos = (linalg::dot(zs, xs).as_f64() / (zn * xn)).clamp(-1.0, 1.0);
    let theta = cos.acos();
    let cx = 1.0 - 2.0 * theta / PI;
    let cz = 2.0 * theta.sin() / PI * xn / zn;
    let mean: Vec<T> = zs
        .iter()
        .zip(xs)
        .map(|(&zi, &xi)| T::lit(cx * xi.as_f64() + cz * zi.as_f64()))
        .collect();
    let population_gradient = zs.iter().zip(&mean).map(|(&zi, &mi)| zi - mi).collect();
    Ok(ExpectedUpdate {
        mean,
        population_gradient,
        theta,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: Vec<f64>,
    /// Per-component standard error of `mean` (sample std / √samples).
    pub std_error: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
}

/// Samples per independent stream in the Monte-Carlo oracle.
const MC_CHUNK: usize = 1 << 15;

/// Empirical mean of `σ(aᵀz)|aᵀx| a` over i.i.d. standard Gaussian `a`.
///
/// Chunks draw from their own ChaCha stream and are reduced in chunk order, so
/// the estimate is bit-identical for any thread count.
pub fn mc_expectation_oracle<T: Scalar>(
    z: &SignalVector<T>,
    x: &SignalVector<T>,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if samples < 1000 {
        return param("Monte-Carlo oracle needs at least 1000 samples");
    }
    if z.dim() != x.dim() {
        return param("dimension mismatch in oracle");
    }
    let n = z.dim();
    let zs: Vec<f64> = z.as_slice().iter().map(|v| v.as_f64()).collect();
    let xs: Vec<f64> = x.as_slice().iter().map(|v| v.as_f64()).collect();
    let chunks = samples.div_ceil(MC_CHUNK);
    let partial: Vec<(Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut rng = rng::stream(seed, c as u64);
            let mut a = vec![0.0; n];
            let mut sum = vec![0.0; n];
            let mut sq = vec![0.0; n];
            for _ in 0..count {
                for v in a.iter_mut() {
                    *v = StandardNormal.sample(&mut rng);
                }
                let w = sign0(linalg::dot(&a, &zs)) * linalg::dot(&a, &xs).abs();
                for j in 0..n {
                    let s = w * a[j];
                    sum[j] += s;
                    sq[j] += s * s;
                }
            }
            (sum, sq)
        })
        .collect();
    let mut sum = vec![0.0; n];
    let mut sq = vec![0.0; n];
    for (s, q) in &partial {
        linalg::axpy(1.0, s, &mut sum);
        linalg::axpy(1.0, q, &mut sq);
    }
    let nf = samples as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
    let std_error = sq
        .iter()
        .zip(&mean)
        .map(|(q, mu)| ((q / nf - mu * mu).max(0.0) * nf / (nf - 1.0)).sqrt() / nf.sqrt())
        .collect();
    Ok(MonteCarloEstimate {
        mean,
        std_error,
        samples,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

    fn sv(v: &[f64]) -> SignalVector<f64> {
        SignalVector::from_f64(v).unwrap()
    }

    #[test]
    fn decompose_examples() {
        let d = decompose(&sv(&[1.0, 0.0]), &sv(&[1.0, 0.0])).unwrap();
        assert_eq!((d.alpha, d.beta, d.r, d.omega, d.theta), (1.0, 0.0, 1.0, FRAC_PI_2, 0.0));

        let d = decompose(&sv(&[0.0, 1.0]), &sv(&[1.0, 0.0])).unwrap();
        assert_eq!((d.alpha, d.beta, d.r, d.omega, d.theta), (0.0, 1.0, 1.0, 0.0, FRAC_PI_2));

        let d = decompose(&sv(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]), &sv(&[1.0, 0.0])).unwrap();
        assert!((d.alpha - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((d.beta - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((d.omega - FRAC_PI_4).abs() < 1e-15);
        assert!((d.theta - FRAC_PI_4).abs() < 1e-7);

        assert!(decompose_slice(&[1.0, 0.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn dist_examples() {
        let x = sv(&[1.0, 0.0]);
        assert_eq!(dist(&x, &x).unwrap(), 0.0);
        assert_eq!(dist(&x.negated(), &x).unwrap(), 0.0);
        assert_eq!(dist(&sv(&[1.0, 1.0]), &x).unwrap(), 1.0);
    }

    #[test]
    fn expected_update_examples() {
        let x = sv(&[1.0, 0.0, 0.0]);
        let e = expected_update(&x.scaled(2.0), &x).unwrap();
        assert!(e.mean.iter().zip(x.as_slice()).all(|(a, b)| (a - b).abs() < 1e-15));
        let e = expected_update(&x, &x).unwrap();
        assert!(e.population_gradient.iter().all(|v| v.abs() < 1e-15));

        let z = sv(&[0.0, 3.0, 0.0]);
        let e = expected_update(&z, &x).unwrap();
        let want = [0.0, 2.0 / PI, 0.0];
        assert!(e.mean.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-15));

        let z = sv(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0]);
        let e = expected_update(&z, &x).unwrap();
        let c = 2f64.sqrt() / PI;
        assert!((c - 0.45016).abs() < 1e-5);
        let want = [0.5 + c * FRAC_1_SQRT_2, c * FRAC_1_SQRT_2, 0.0];
        assert!(e.mean.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-12));

        assert!(expected_update(&sv(&[0.0, 0.0, 0.0]), &x).is_err());
    }

    #[test]
    fn oracle_theta_zero_and_quarter() {
        let x = sv(&[1.0, 0.0]);
        let est = mc_expectation_oracle(&x, &x, 1_000_000, 11).unwrap();
        assert!((est.mean[0] - 1.0).abs() < 5e-3 && est.mean[1].abs() < 5e-3);

        let z = sv(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]);
        let closed = expected_update(&z, &x).unwrap().mean;
        let est = mc_expectation_oracle(&z, &x, 1_000_000, 12).unwrap();
        for j in 0..2 {
            assert!((est.mean[j] - closed[j]).abs() < 5e-3);
            assert!((est.mean[j] - closed[j]).abs() <= 5.0 / 1000.0);
        }
    }

    #[test]
    fn oracle_is_exactly_antisymmetric() {
        let z = sv(&[0.3, -0.2, 0.9]);
        let x = sv(&[1.0, 0.5, 0.0]);
        let a = mc_expectation_oracle(&z, &x, 5000, 3).unwrap();
        let b = mc_expectation_oracle(&z.negated(), &x, 5000, 3).unwrap();
        assert!(a.mean.iter().zip(&b.mean).all(|(p, q)| *p == -*q));
        assert!(mc_expectation_oracle(&z, &x, 999, 3).is_err());
    }

    proptest! {
        #[test]
        fn decompose_reconstructs(
            z in proptest::collection::vec(-3.0f64..3.0, 6),
            x in proptest::collection::vec(-3.0f64..3.0, 6),
        ) {
            let xx: f64 = x.iter().map(|v| v * v).sum();
            prop_assume!(xx > 1e-3);
            let d = decompose_slice(&z, &x).unwrap();
            let perp: Vec<f64> = z.iter().zip(&x).map(|(a, b)| a - d.alpha * b).collect();
            let pdx: f64 = perp.iter().zip(&x).map(|(a, b)| a * b).sum();
            let scale = linalg::norm(&z) * xx.sqrt() + 1e-300;
            prop_assert!(pdx.abs() <= 1e-12 * scale.max(1.0));
            let lhs = d.r * d.r;
            let rhs = d.alpha * d.alpha + d.beta * d.beta;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(1e-300));
            prop_assert!(d.omega >= 0.0 && d.omega <= FRAC_PI_2);
            prop_assert!(d.theta >= 0.0 && d.theta <= FRAC_PI_2);
        }
    }
}
