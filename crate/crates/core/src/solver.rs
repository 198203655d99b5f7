//! Iterative schemes: resampled / full-batch reshaped Wirtinger flow and the
//! Wirtinger flow baseline.
//!
//! The ground truth enters only through the per-iteration metrics and the
//! distance-based stopping rule; updates never see it.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::analysis::{self, detect_landmarks, IterateTrace, SubstageLandmarks, TraceRow};
use crate::ensemble::{partition_blocks, BlockSchedule, Measurements, SignalVector};
use crate::error::{param, Error, Result};
use crate::linalg;
use crate::objective::{rwf_gradient_slice, wf_gradient_slice, GradientResult};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Rwf,
    Wf,
}

impl Algorithm {
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Rwf => "rwf",
            Algorithm::Wf => "wf",
        }
    }
}

/// Stopping rule besides the iteration cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// `dist(z_k, x) ≤ tol·‖x‖`.
    Distance,
    /// Block loss relative to its value at `z = 0` is `≤ tol²`; needs no truth.
    RelativeLoss,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    pub mu: f64,
    /// Radius of the second-phase neighborhood.
    pub gamma: f64,
    /// `δ` for the `T_1` landmark.
    pub delta: f64,
    /// Block count `K`; 1 is full batch.
    pub blocks: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub termination: Termination,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mu: 0.5,
            gamma: 0.1,
            delta: analysis::DEFAULT_DELTA,
            blocks: 1,
            max_iters: 500,
            tol: 1e-7,
            seed: 0,
            algorithm: Algorithm::Rwf,
            termination: Termination::Distance,
        }
    }
}

impl SolverConfig {
    pub fn wf(mu: f64) -> Self {
        Self {
            mu,
            algorithm: Algorithm::Wf,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return param(format!("step size must be >= 0, got {}", self.mu));
        }
        if self.algorithm == Algorithm::Rwf && self.mu > 1.0 {
            return param(format!("rwf step size must be <= 1, got {}", self.mu));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return param(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if !(self.tol > 0.0 && self.tol < self.gamma) {
            return param(format!("tol must lie in (0, gamma), got {}", self.tol));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return param(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if self.blocks == 0 {
            return param("block count must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport<T> {
    pub trace: IterateTrace,
    pub landmarks: SubstageLandmarks,
    pub t_gamma: Option<usize>,
    pub converged: bool,
    /// Number of updates applied.
    pub iterations: usize,
    /// `dist(z_T, x)` (absolute).
    pub final_dist: f64,
    /// Median of `dist_{k+1}/dist_k` over `k ≥ T_γ`; needs two Phase-2 rows.
    pub contraction_estimate: Option<f64>,
    pub final_iterate: SignalVector<T>,
    pub wall_time: Duration,
}

/// `z − μ · rwf_gradient(block, z)`
pub fn rwf_step<T: Scalar, M: Measurements<T> + ?Sized>(
    z: &SignalVector<T>,
    ens: &M,
    block: std::ops::Range<usize>,
    mu: f64,
) -> Result<SignalVector<T>> {
    let g = rwf_gradient_slice(ens, block, z.as_slice())?;
    let mut next = z.as_slice().to_vec();
    linalg::axpy(-T::lit(mu), &g.gradient, &mut next);
    SignalVector::new(next)
}

/// Resampled RWF: iteration `k` uses block `k mod K` of `schedule`.
pub fn run<T: Scalar, M: Measurements<T> + ?Sized>(
    config: &SolverConfig,
    ens: &M,
    schedule: &BlockSchedule,
    z0: &SignalVector<T>,
    x: &SignalVector<T>,
) -> Result<RunReport<T>> {
    if config.algorithm != Algorithm::Rwf {
        return param("run drives rwf; use run_wf for the intensity loss");
    }
    if schedule.total() != ens.len() {
        return param(format!(
            "schedule covers {} samples, ensemble has {}",
            schedule.total(),
            ens.len()
        ));
    }
    iterate(config, ens, schedule, z0, x, |e, b, z| rwf_gradient_slice(e, b, z))
}

/// Full-batch Wirtinger flow on the intensity loss.
pub fn run_wf<T: Scalar, M: Measurements<T> + ?Sized>(
    config: &SolverConfig,
    ens: &M,
    z0: &SignalVector<T>,
    x: &SignalVector<T>,
) -> Result<RunReport<T>> {
    if config.algorithm != Algorithm::Wf {
        return param("run_wf expects algorithm = wf");
    }
    let schedule = partition_blocks(ens.len(), 1)?;
    iterate(config, ens, &schedule, z0, x, |e, b, z| wf_gradient_slice(e, b, z))
}

/// Dispatch on `config.algorithm`, building the block schedule from `config.blocks`.
pub fn solve<T: Scalar, M: Measurements<T> + ?Sized>(
    config: &SolverConfig,
    ens: &M,
    z0: &SignalVector<T>,
    x: &SignalVector<T>,
) -> Result<RunReport<T>> {
    match config.algorithm {
        Algorithm::Rwf => run(config, ens, &partition_blocks(ens.len(), config.blocks)?, z0, x),
        Algorithm::Wf => run_wf(config, ens, z0, x),
    }
}

fn block_energy<T: Scalar, M: Measurements<T> + ?Sized>(ens: &M, block: std::ops::Range<usize>) -> f64 {
    let len = block.len() as f64;
    let sum: f64 = block.map(|i| ens.sample(i).1.as_f64().powi(2)).sum();
    sum / len
}

fn iterate<T, M, G>(
    config: &SolverConfig,
    ens: &M,
    schedule: &BlockSchedule,
    z0: &SignalVector<T>,
    x: &SignalVector<T>,
    gradient: G,
) -> Result<RunReport<T>>
where
    T: Scalar,
    M: Measurements<T> + ?Sized,
    G: Fn(&M, std::ops::Range<usize>, &[T]) -> Result<GradientResult<T>>,
{
    config.validate()?;
    if z0.dim() != ens.dim() || x.dim() != ens.dim() {
        return param("iterate, truth and ensemble dimensions must agree");
    }
    if !ens.is_observed() {
        return Err(Error::State("ensemble has no observations".into()));
    }
    let start = Instant::now();
    let xs = x.as_slice();
    let x_norm = x.norm().as_f64();
    if x_norm == 0.0 {
        return param("ground truth must be nonzero");
    }
    let guard = 10.0 * z0.norm().as_f64() + 10.0;
    let mu = T::lit(config.mu);
    let energies: Vec<f64> = match config.termination {
        Termination::RelativeLoss => schedule
            .blocks()
            .iter()
            .map(|b| block_energy(ens, b.clone()))
            .collect(),
        Termination::Distance => Vec::new(),
    };

    let mut z = z0.as_slice().to_vec();
    let mut trace = IterateTrace::new();
    let mut converged = false;
    let mut k = 0;
    loop {
        let block = schedule.block_for_iteration(k);
        let g = gradient(ens, block, &z)?;
        let geo = analysis::decompose_slice(&z, xs)?;
        let dist = analysis::dist_slice(&z, xs)?.as_f64();
        let loss = g.loss.as_f64();
        trace.push(TraceRow {
            k,
            alpha: geo.alpha,
            beta: geo.beta,
            r: geo.r,
            omega: geo.omega,
            dist_rel: dist / x_norm,
            loss,
        });
        let done = match config.termination {
            Termination::Distance => dist <= config.tol * x_norm,
            Termination::RelativeLoss => {
                let e = energies[k % energies.len()];
                e == 0.0 || loss / (0.5 * e) <= config.tol * config.tol
            }
        };
        if done {
            converged = true;
            break;
        }
        if k >= config.max_iters {
            break;
        }
        linalg::axpy(-mu, &g.gradient, &mut z);
        k += 1;
        let nrm = linalg::norm(&z).as_f64();
        if !nrm.is_finite() || nrm > guard {
            return Err(Error::Divergence {
                iteration: k,
                trace: Box::new(trace),
            });
        }
    }

    let landmarks = detect_landmarks(&trace, config.gamma, config.delta);
    let contraction_estimate = landmarks
        .t_gamma
        .and_then(|t| contraction_after(&trace, t));
    let final_dist = trace.last().map_or(f64::NAN, |r| r.dist_rel * x_norm);
    Ok(RunReport {
        t_gamma: landmarks.t_gamma,
        landmarks,
        converged,
        iterations: k,
        final_dist,
        contraction_estimate,
        final_iterate: SignalVector::new(z)?,
        wall_time: start.elapsed(),
        trace,
    })
}

/// Median per-step distance ratio over rows from `start` onward.
pub fn contraction_after(trace: &IterateTrace, start: usize) -> Option<f64> {
    let d: Vec<f64> = trace.rows().iter().filter(|r| r.k >= start).map(|r| r.dist_rel).collect();
    let mut ratios: Vec<f64> = d
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .collect();
    if ratios.is_empty() {
        return None;
    }
    ratios.sort_by(f64::total_cmp);
    Some(crate::stats::median_sorted(&ratios))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{generate_gaussian_ensemble, MeasurementSet};
    use crate::init::random_init;

    fn problem(n: usize, m: usize, seed: u64) -> (MeasurementSet<f64>, SignalVector<f64>, SignalVector<f64>) {
        let x = SignalVector::random_unit(n, seed ^ 0x55).unwrap();
        let e = generate_gaussian_ensemble(n, m, seed).unwrap().observe(&x).unwrap();
        let z0 = random_init(n, 1.0, seed ^ 0xaa).unwrap();
        (e, x, z0)
    }

    #[test]
    fn step_examples() {
        let (e, x, _) = problem(5, 50, 1);
        assert_eq!(rwf_step(&x, &e, 0..50, 0.5).unwrap(), x);
        assert_eq!(rwf_step(&x.negated(), &e, 0..50, 0.5).unwrap(), x.negated());

        let truth = SignalVector::from_f64(&[1.0, 0.0]).unwrap();
        let e = MeasurementSet::from_rows(2, vec![1.0, 0.0]).unwrap().observe(&truth).unwrap();
        let z = SignalVector::from_f64(&[2.0, 0.0]).unwrap();
        assert_eq!(rwf_step(&z, &e, 0..1, 0.5).unwrap().as_slice(), &[1.5, 0.0]);
    }

    #[test]
    fn start_at_truth() {
        let (e, x, _) = problem(10, 100, 2);
        let sched = partition_blocks(100, 1).unwrap();
        let r = run(&SolverConfig::default(), &e, &sched, &x, &x).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.t_gamma, Some(0));
        let w = run_wf(&SolverConfig::wf(0.1), &e, &x, &x).unwrap();
        assert!(w.converged && w.iterations == 0);
    }

    #[test]
    fn zero_step_is_constant() {
        let (e, x, z0) = problem(10, 100, 3);
        let cfg = SolverConfig { mu: 0.0, max_iters: 20, ..Default::default() };
        let r = solve(&cfg, &e, &z0, &x).unwrap();
        assert!(!r.converged);
        assert_eq!(r.trace.len(), 21);
        assert!(r.trace.rows().iter().all(|row| row.dist_rel == r.trace.rows()[0].dist_rel));
        let cfg = SolverConfig { mu: 0.0, max_iters: 20, ..SolverConfig::wf(0.0) };
        let w = run_wf(&cfg, &e, &z0, &x).unwrap();
        assert!(!w.converged && w.final_iterate == z0);
    }

    // Five cyclic blocks of 10n samples each.
    #[test]
    fn resampled_recovers_at_tenfold_block_oversampling() {
        let mut ok = 0;
        for seed in 0..100 {
            let (e, x, z0) = problem(100, 5000, seed);
            let cfg = SolverConfig { max_iters: 200, blocks: 5, ..Default::default() };
            let r = solve(&cfg, &e, &z0, &x).unwrap();
            if r.converged {
                ok += 1;
                assert!(r.final_dist <= 1e-7);
            }
        }
        assert!(ok >= 95, "{ok}/100");
    }

    #[test]
    fn sign_equivariance() {
        let (e, x, z0) = problem(30, 300, 4);
        let cfg = SolverConfig { max_iters: 60, ..Default::default() };
        let a = solve(&cfg, &e, &z0, &x).unwrap();
        let b = solve(&cfg, &e, &z0.negated(), &x).unwrap();
        assert_eq!(a.final_iterate.negated(), b.final_iterate);
        for (p, q) in a.trace.rows().iter().zip(b.trace.rows()) {
            assert_eq!(p.dist_rel, q.dist_rel);
            assert_eq!(p.alpha, -q.alpha);
        }
    }

    #[test]
    fn bit_identical_reruns() {
        let (e, x, z0) = problem(40, 400, 5);
        let cfg = SolverConfig::default();
        let a = solve(&cfg, &e, &z0, &x).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let (e2, x2, z2) = pool.install(|| problem(40, 400, 5));
        let b = solve(&cfg, &e2, &z2, &x2).unwrap();
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn truth_free_termination() {
        let (e, x, z0) = problem(50, 2500, 6);
        let cfg = SolverConfig {
            termination: Termination::RelativeLoss,
            tol: 1e-6,
            blocks: 5,
            ..Default::default()
        };
        let r = solve(&cfg, &e, &z0, &x).unwrap();
        assert!(r.converged);
        assert!(r.trace.last().unwrap().dist_rel < 1e-4);
    }

    #[test]
    fn divergence_is_reported_with_trace() {
        let (e, x, z0) = problem(20, 200, 7);
        let cfg = SolverConfig { mu: 50.0, max_iters: 100, ..SolverConfig::wf(50.0) };
        match run_wf(&cfg, &e, &z0, &x) {
            Err(Error::Divergence { iteration, trace }) => {
                assert!(iteration >= 1);
                assert_eq!(trace.len(), iteration);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        let bad = [
            SolverConfig { mu: -0.1, ..Default::default() },
            SolverConfig { mu: 1.5, ..Default::default() },
            SolverConfig { gamma: 1.0, ..Default::default() },
            SolverConfig { tol: 0.2, ..Default::default() },
            SolverConfig { blocks: 0, ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
        let (e, x, z0) = problem(5, 50, 8);
        let wrong = SignalVector::random_unit(6, 1).unwrap();
        assert!(solve(&SolverConfig::default(), &e, &wrong, &x).is_err());
        assert!(solve(&SolverConfig::default(), &e, &z0, &wrong).is_err());
    }

    #[test]
    fn phase_two_is_monotone() {
        let mut steps = 0usize;
        let mut good = 0usize;
        for seed in 0..50 {
            let (e, x, z0) = problem(100, 1000, 100 + seed);
            let r = solve(&SolverConfig::default(), &e, &z0, &x).unwrap();
            let d: Vec<f64> = r.trace.dists().collect();
            if let Some(start) = d.iter().position(|&v| v <= 0.1) {
                for w in d[start..].windows(2) {
                    steps += 1;
                    if w[1] <= w[0] {
                        good += 1;
                    }
                }
            }
        }
        assert!(good as f64 >= 0.99 * steps as f64, "{good}/{steps}");
    }

    #[test]
    fn contraction_in_unit_interval() {
        let (e, x, z0) = problem(100, 5000, 9);
        let r = solve(&SolverConfig { blocks: 5, ..Default::default() }, &e, &z0, &x).unwrap();
        assert!(r.converged);
        let c = r.contraction_estimate.unwrap();
        assert!(c > 0.0 && c < 1.0);
    }
}
