//! Random and spectral starting points, and the random-start acceptance
//! condition.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::ensemble::{Measurements, SignalVector};
use crate::error::{param, Error, Result};
use crate::linalg;
use crate::rng;
use crate::Scalar;

/// Default power-iteration budget.
pub const POWER_ITERATIONS: usize = 200;
/// Successive-iterate angle below which power iteration stops.
pub const POWER_ANGLE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMethod {
    Random,
    Spectral,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitReport<T> {
    pub z0: SignalVector<T>,
    pub method: InitMethod,
    /// `|⟨z0,x⟩|/(‖z0‖‖x‖)`; filled by [`InitReport::with_truth`].
    pub correlation: Option<f64>,
    /// `‖z0‖/‖x‖`; filled by [`InitReport::with_truth`].
    pub norm_ratio: Option<f64>,
    /// Power iterations actually performed (spectral only).
    pub iterations: usize,
    pub wall_time: Duration,
}

impl<T: Scalar> InitReport<T> {
    pub fn with_truth(mut self, x: &SignalVector<T>) -> Result<Self> {
        if x.dim() != self.z0.dim() {
            return param("dimension mismatch");
        }
        let zn = self.z0.norm().as_f64();
        let xn = x.norm().as_f64();
        if xn == 0.0 {
            return param("ground truth must be nonzero");
        }
        let ip = linalg::dot(self.z0.as_slice(), x.as_slice()).as_f64().abs();
        self.correlation = Some(if zn == 0.0 { 0.0 } else { (ip / (zn * xn)).min(1.0) });
        self.norm_ratio = Some(zn / xn);
        Ok(self)
    }
}

/// `z0` with i.i.d. `N(0, scale²/n)` entries.
pub fn random_init<T: Scalar>(n: usize, scale: f64, seed: u64) -> Result<SignalVector<T>> {
    if !(scale > 0.0) || !scale.is_finite() {
        return param(format!("scale must be positive, got {scale}"));
    }
    if n < 2 {
        return param(format!("dimension must be >= 2, got {n}"));
    }
    SignalVector::new(rng::gaussian_vec(n, scale / (n as f64).sqrt(), seed))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerIteration<T> {
    /// Unit vector, first nonzero coordinate positive.
    pub vector: Vec<T>,
    /// Rayleigh quotient at the returned vector.
    pub eigenvalue: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Power iteration for a symmetric PSD operator `apply(v, out)`.
/// Stops after `max_iters` sweeps or when the angle between successive
/// iterates drops below `angle_tol`.
pub fn power_iteration<T: Scalar>(
    mut apply: impl FnMut(&[T], &mut [T]),
    start: Vec<T>,
    max_iters: usize,
    angle_tol: f64,
) -> Result<PowerIteration<T>> {
    if max_iters == 0 {
        return param("power iteration needs at least one iteration");
    }
    let mut v = start;
    let nrm = linalg::norm(&v);
    if !(nrm > T::zero()) {
        return param("power iteration start must be nonzero");
    }
    linalg::scale(T::one() / nrm, &mut v);
    let mut w = vec![T::zero(); v.len()];
    let mut eigenvalue = T::zero();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        apply(&v, &mut w);
        iterations += 1;
        eigenvalue = linalg::dot(&v, &w);
        let wn = linalg::norm(&w);
        if !(wn > T::zero()) || !wn.is_finite() {
            return Err(Error::State("power iteration hit the null space".into()));
        }
        linalg::scale(T::one() / wn, &mut w);
        // sin of the angle between successive unit iterates
        let c = linalg::dot(&v, &w).as_f64().abs().min(1.0);
        let sin = (1.0 - c * c).max(0.0).sqrt();
        std::mem::swap(&mut v, &mut w);
        if sin < angle_tol {
            converged = true;
            break;
        }
    }
    canonicalize_sign(&mut v);
    Ok(PowerIteration {
        vector: v,
        eigenvalue,
        iterations,
        converged,
    })
}

fn canonicalize_sign<T: Scalar>(v: &mut [T]) {
    if let Some(&first) = v.iter().find(|c| **c != T::zero()) {
        if first < T::zero() {
            linalg::scale(-T::one(), v);
        }
    }
}

/// `√(π/2) · mean(y)`, an estimate of `‖x‖` from magnitude observations.
pub fn norm_estimate<T: Scalar>(observations: &[T]) -> T {
    let mean = observations.iter().copied().sum::<T>() / T::lit(observations.len() as f64);
    T::lit((PI / 2.0).sqrt()) * mean
}

/// `D v = (1/m) Σ y_i ⟨a_i, v⟩ a_i`, applied without forming `D`.
pub fn apply_weighted_covariance<T: Scalar, M: Measurements<T> + ?Sized>(ens: &M, v: &[T], out: &mut [T]) {
    out.iter_mut().for_each(|o| *o = T::zero());
    for i in 0..ens.len() {
        let (a, yi) = ens.sample(i);
        linalg::axpy(yi * linalg::dot(a, v), a, out);
    }
    linalg::scale(T::one() / T::lit(ens.len() as f64), out);
}

/// How the spectral start finds the principal eigenvector of `D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralMethod {
    /// Power iteration with `D v` applied from the samples, `O(mn)` per sweep.
    #[default]
    MatrixFree,
    /// Form `D` explicitly (`O(mn²)`), then power-iterate on it (`O(n²)` per sweep).
    Dense,
}

/// Rows per block when forming `D`.
const GRAM_ROWS: usize = 256;

/// `D = (1/m) Σ y_i a_i a_iᵀ` as a dense row-major `n × n` matrix.
pub fn weighted_covariance<T: Scalar, M: Measurements<T> + ?Sized>(ens: &M) -> Vec<T> {
    let (n, m) = (ens.dim(), ens.len());
    let mut d = vec![T::zero(); n * n];
    let mut a = Vec::with_capacity(GRAM_ROWS * n);
    let mut b = Vec::with_capacity(GRAM_ROWS * n);
    let inv_m = T::one() / T::lit(m as f64);
    for start in (0..m).step_by(GRAM_ROWS) {
        let end = (start + GRAM_ROWS).min(m);
        a.clear();
        b.clear();
        for i in start..end {
            let (row, y) = ens.sample(i);
            a.extend_from_slice(row);
            b.extend(row.iter().map(|&v| y * inv_m * v));
        }
        T::gram_accumulate(end - start, n, &a, &b, &mut d);
    }
    d
}

/// Spectral start `λ₀ v`: `v` is the principal eigenvector of
/// `(1/m) Σ y_i a_i a_iᵀ` found by matrix-free power iteration from a seeded
/// random start, `λ₀` the norm estimate.
pub fn spectral_init<T: Scalar, M: Measurements<T> + ?Sized>(
    ens: &M,
    iterations: usize,
    seed: u64,
) -> Result<InitReport<T>> {
    spectral_init_with(ens, SpectralMethod::MatrixFree, iterations, seed)
}

/// [`spectral_init`] with an explicit eigenvector method. Both methods run the
/// same power iteration from the same start, so they agree up to rounding.
pub fn spectral_init_with<T: Scalar, M: Measurements<T> + ?Sized>(
    ens: &M,
    method: SpectralMethod,
    iterations: usize,
    seed: u64,
) -> Result<InitReport<T>> {
    if iterations == 0 {
        return param("spectral init needs at least one power iteration");
    }
    if !ens.is_observed() {
        return Err(Error::State("ensemble has no observations".into()));
    }
    let start = Instant::now();
    let n = ens.dim();
    let v0 = rng::gaussian_vec(n, 1.0, seed);
    let pi = match method {
        SpectralMethod::MatrixFree => power_iteration(
            |v, out| apply_weighted_covariance(ens, v, out),
            v0,
            iterations,
            POWER_ANGLE_TOL,
        )?,
        SpectralMethod::Dense => {
            let d = weighted_covariance(ens);
            power_iteration(
                |v, out| {
                    for (o, row) in out.iter_mut().zip(d.chunks_exact(n)) {
                        *o = linalg::dot(row, v);
                    }
                },
                v0,
                iterations,
                POWER_ANGLE_TOL,
            )?
        }
    };
    let y: Vec<T> = (0..ens.len()).map(|i| ens.sample(i).1).collect();
    let lambda = norm_estimate(&y);
    let z0 = SignalVector::new(pi.vector.iter().map(|&c| lambda * c).collect())?;
    Ok(InitReport {
        z0,
        method: InitMethod::Spectral,
        correlation: None,
        norm_ratio: None,
        iterations: pi.iterations,
        wall_time: start.elapsed(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitCheck {
    pub satisfied: bool,
    /// `|⟨z0,x⟩|/‖x‖² − 1/(2√(n ln n))`; nonnegative when the correlation part holds.
    pub correlation_margin: f64,
    /// `1/ln n − |‖z0‖/‖x‖ − 1|`; nonnegative when the norm band holds.
    pub norm_margin: f64,
}

/// Random-start condition: `|⟨z0,x⟩|/‖x‖ ≥ 1/(2√(n ln n))` and
/// `(1 − 1/ln n)‖x‖ ≤ ‖z0‖ ≤ (1 + 1/ln n)‖x‖`, with lengths in units of ‖x‖.
pub fn check_init_condition<T: Scalar>(z0: &SignalVector<T>, x: &SignalVector<T>) -> Result<InitCheck> {
    if z0.dim() != x.dim() {
        return param("dimension mismatch");
    }
    let xx = linalg::dot(x.as_slice(), x.as_slice()).as_f64();
    if xx == 0.0 {
        return param("ground truth must be nonzero");
    }
    let n = x.dim() as f64;
    let log_n = n.ln();
    let corr = linalg::dot(z0.as_slice(), x.as_slice()).as_f64().abs() / xx;
    let ratio = z0.norm().as_f64() / xx.sqrt();
    let correlation_margin = corr - 1.0 / (2.0 * (n * log_n).sqrt());
    let norm_margin = 1.0 / log_n - (ratio - 1.0).abs();
    Ok(InitCheck {
        satisfied: correlation_margin >= 0.0 && norm_margin >= 0.0,
        correlation_margin,
        norm_margin,
    })
}
