//! The clean `(α, β)` recursion: steps to the γ-ball across `n`, and a
//! tracking check against one empirical full-batch run.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::svg::{LinePlot, Series};
use super::{
    build_problem, file_names, prepare_dir, read_csv, run_trial, worker_count, write_csv,
    write_manifest, ExperimentSpec, SeedRecord,
};
use crate::analysis::{random_start, run_state_evolution, steps_to_gamma, Perturbation};
use crate::error::{Error, Result};
use crate::stats::least_squares;

const MAX_STEPS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RecursionRow {
    n: usize,
    k: usize,
    alpha: f64,
    beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StepsRow {
    n: usize,
    ln_n: f64,
    alpha0: f64,
    steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TrackingRow {
    k: usize,
    alpha_empirical: f64,
    beta_empirical: f64,
    alpha_recursion: f64,
    beta_recursion: f64,
    alpha_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateEvolutionOutcome {
    /// `(n, steps)` for the clean recursion from the random-start point.
    pub steps: Vec<(usize, usize)>,
    /// Slope `p` of `ln(steps / ln n) = c + p ln n`; `None` with fewer than
    /// two dimensions.
    pub n_exponent: Option<f64>,
    /// Largest `|α_emp − α_rec|` over the tracked iterations `1..=track_iters`.
    pub max_alpha_deviation: f64,
    pub diverged: usize,
    #[serde(skip)]
    pub files: Vec<PathBuf>,
}

pub fn cmd_state_evolution(spec: &ExperimentSpec) -> Result<StateEvolutionOutcome> {
    spec.validate()?;
    let started = Instant::now();
    let dir = spec.output_dir.as_path();
    prepare_dir(dir)?;
    let workers = worker_count(spec.workers)?;
    let mu = spec.mu_rwf;

    let mut dims = spec.dims.clone();
    dims.sort_unstable();
    dims.dedup();
    let mut recursion = Vec::new();
    let mut steps = Vec::new();
    for &n in &dims {
        let (a0, b0) = random_start(n);
        let s = steps_to_gamma(a0, b0, mu, spec.gamma, MAX_STEPS)?.ok_or_else(|| {
            Error::State(format!("recursion did not reach the gamma ball within {MAX_STEPS} steps at n = {n}"))
        })?;
        for (k, st) in run_state_evolution(a0, b0, mu, s, Perturbation::Clean)?
            .into_iter()
            .enumerate()
        {
            recursion.push(RecursionRow { n, k, alpha: st.alpha, beta: st.beta });
        }
        steps.push(StepsRow { n, ln_n: (n as f64).ln(), alpha0: a0, steps: s });
    }
    let fit_rows: Vec<&StepsRow> = steps.iter().filter(|r| r.steps > 0).collect();
    let n_exponent = if fit_rows.len() >= 2 {
        let x: Vec<Vec<f64>> = fit_rows.iter().map(|r| vec![r.ln_n]).collect();
        let y: Vec<f64> = fit_rows.iter().map(|r| (r.steps as f64 / r.ln_n).ln()).collect();
        least_squares(&x, &y).map(|(c, _)| c[0])
    } else {
        None
    };

    // empirical tracking run
    let n = spec.track_dim;
    let seed = spec.trial_seed(n, 0);
    let per_block = spec.track_samples.div_ceil(spec.blocks);
    let p = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::State(format!("worker pool: {e}")))?
        .install(|| build_problem(n, per_block, spec.blocks, seed))?;
    let cfg = crate::solver::SolverConfig {
        max_iters: spec.track_iters,
        tol: 1e-12,
        ..spec.rwf_config(1e-12)
    };
    let run = run_trial(&cfg, &p.ensemble, &p.z0, &p.x)?;
    let rows = run.trace.rows();
    let (a0, b0) = (rows[0].alpha, rows[0].beta);
    let rec = run_state_evolution(a0, b0, mu, rows.len().saturating_sub(1), Perturbation::Clean)?;
    let tracking: Vec<TrackingRow> = rows
        .iter()
        .zip(&rec)
        .map(|(r, s)| TrackingRow {
            k: r.k,
            alpha_empirical: r.alpha,
            beta_empirical: r.beta,
            alpha_recursion: s.alpha,
            beta_recursion: s.beta,
            alpha_deviation: (r.alpha - s.alpha).abs(),
        })
        .collect();
    let max_alpha_deviation = tracking
        .iter()
        .filter(|t| t.k >= 1)
        .map(|t| t.alpha_deviation)
        .fold(0.0, f64::max);

    let rec_path = dir.join("state_evolution.csv");
    let steps_path = dir.join("se_steps.csv");
    let track_path = dir.join("se_tracking.csv");
    write_csv(&rec_path, &recursion)?;
    write_csv(&steps_path, &steps)?;
    write_csv(&track_path, &tracking)?;
    let svg = plot(dir)?;
    let files = vec![rec_path, steps_path, track_path, svg];
    let outcome = StateEvolutionOutcome {
        steps: steps.iter().map(|r| (r.n, r.steps)).collect(),
        n_exponent,
        max_alpha_deviation,
        diverged: usize::from(run.diverged),
        files,
    };
    let seeds = [SeedRecord { n, trial: 0, seed }];
    write_manifest(spec, workers, &file_names(&outcome.files), &seeds, started, &outcome)?;
    Ok(outcome)
}

pub(crate) fn plot(dir: &Path) -> Result<PathBuf> {
    let tracking: Vec<TrackingRow> = read_csv(&dir.join("se_tracking.csv"))?;
    let recursion: Vec<RecursionRow> = read_csv(&dir.join("state_evolution.csv"))?;
    let mut p = LinePlot::new("State evolution", "iteration k", "value");
    let mut dims: Vec<usize> = recursion.iter().map(|r| r.n).collect();
    dims.dedup();
    for &n in dims.iter().rev().take(1) {
        let pick = |f: fn(&RecursionRow) -> f64| -> Vec<(f64, f64)> {
            recursion.iter().filter(|r| r.n == n).map(|r| (r.k as f64, f(r))).collect()
        };
        p.series.push(Series::line(format!("recursion alpha, n = {n}"), pick(|r| r.alpha)));
        p.series.push(Series::line(format!("recursion beta, n = {n}"), pick(|r| r.beta)));
    }
    p.series.push(
        Series::line("tracked alpha (empirical)", tracking.iter().map(|t| (t.k as f64, t.alpha_empirical)).collect())
            .with_markers(),
    );
    p.series.push(
        Series::line("tracked alpha (recursion)", tracking.iter().map(|t| (t.k as f64, t.alpha_recursion)).collect())
            .dashed(),
    );
    let path = dir.join("state_evolution.svg");
    p.save(&path)?;
    Ok(path)
}
