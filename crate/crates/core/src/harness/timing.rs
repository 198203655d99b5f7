//! Wall time of the spectral start against random-start RWF.
//!
//! Iteration counts go to `timing_iters.csv` (reproducible); clock readings go
//! to `timing.csv` and `timing_summary.csv`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::svg::{LinePlot, Series};
use super::{
    build_problem, file_names, prepare_dir, purpose, read_csv, run_trial, sub_seed, worker_count,
    write_csv, write_manifest, ExperimentSpec, SeedRecord,
};
use crate::error::Result;
use crate::init::{spectral_init_with, SpectralMethod, POWER_ITERATIONS};
use crate::stats::median;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct IterRow {
    n: usize,
    m: usize,
    blocks: usize,
    rep: usize,
    seed: u64,
    power_iterations: usize,
    power_iterations_matrix_free: usize,
    rwf_iterations: usize,
    rwf_reached: bool,
    diverged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TimeRow {
    n: usize,
    rep: usize,
    /// Dense `D` plus power iteration.
    spectral_seconds: f64,
    matrix_free_seconds: f64,
    /// `+∞` when RWF never reached the target distance.
    rwf_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingCell {
    pub n: usize,
    /// Dense spectral start.
    pub spectral_median: f64,
    pub matrix_free_median: f64,
    pub rwf_median: f64,
    /// `spectral_median / rwf_median`.
    pub ratio: f64,
    /// `matrix_free_median / rwf_median`.
    pub ratio_matrix_free: f64,
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingOutcome {
    pub cells: Vec<TimingCell>,
    pub diverged: usize,
    pub files: Vec<PathBuf>,
}

/// Runs sequentially whatever the worker count, so that repetitions do not
/// compete for cores.
pub fn cmd_timing(spec: &ExperimentSpec) -> Result<TimingOutcome> {
    spec.validate()?;
    let started = Instant::now();
    let dir = spec.output_dir.as_path();
    prepare_dir(dir)?;
    let workers = worker_count(spec.workers)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| crate::Error::State(format!("worker pool: {e}")))?;

    let mut dims = spec.dims.clone();
    dims.sort_unstable();
    dims.dedup();
    let mut iters = Vec::new();
    let mut times = Vec::new();
    for &n in &dims {
        for rep in 0..spec.reps {
            let seed = spec.trial_seed(n, rep);
            let p = pool.install(|| build_problem(n, spec.block_samples(n), spec.blocks, seed))?;
            let first = p.ensemble.view(0..p.per_block)?;
            let power_seed = sub_seed(seed, purpose::POWER);
            let dense = spectral_init_with(&first, SpectralMethod::Dense, POWER_ITERATIONS, power_seed)?;
            let free = spectral_init_with(&first, SpectralMethod::MatrixFree, POWER_ITERATIONS, power_seed)?;
            // stop as soon as dist ≤ γ; the landmark radius is irrelevant here
            let cfg = crate::solver::SolverConfig {
                gamma: 0.5_f64.max(2.0 * spec.gamma).min(0.99),
                ..spec.rwf_config(spec.gamma)
            };
            let run = run_trial(&cfg, &p.ensemble, &p.z0, &p.x)?;
            iters.push(IterRow {
                n,
                m: p.per_block,
                blocks: spec.blocks,
                rep,
                seed,
                power_iterations: dense.iterations,
                power_iterations_matrix_free: free.iterations,
                rwf_iterations: run.iterations,
                rwf_reached: run.converged,
                diverged: run.diverged,
            });
            times.push(TimeRow {
                n,
                rep,
                spectral_seconds: dense.wall_time.as_secs_f64(),
                matrix_free_seconds: free.wall_time.as_secs_f64(),
                rwf_seconds: if run.converged { run.seconds } else { f64::INFINITY },
            });
        }
    }
    let cells: Vec<TimingCell> = dims
        .iter()
        .map(|&n| {
            let s: Vec<f64> = times.iter().filter(|t| t.n == n).map(|t| t.spectral_seconds).collect();
            let f: Vec<f64> = times.iter().filter(|t| t.n == n).map(|t| t.matrix_free_seconds).collect();
            let r: Vec<f64> = times.iter().filter(|t| t.n == n).map(|t| t.rwf_seconds).collect();
            let (sm, fm, rm) = (median(&s), median(&f), median(&r));
            TimingCell {
                n,
                spectral_median: sm,
                matrix_free_median: fm,
                rwf_median: rm,
                ratio: sm / rm,
                ratio_matrix_free: fm / rm,
                reps: s.len(),
            }
        })
        .collect();

    let iter_path = dir.join("timing_iters.csv");
    let time_path = dir.join("timing.csv");
    let summary_path = dir.join("timing_summary.csv");
    write_csv(&iter_path, &iters)?;
    write_csv(&time_path, &times)?;
    write_csv(&summary_path, &cells)?;
    let svg = plot(dir)?;
    let files = vec![iter_path, time_path, summary_path, svg];
    let seeds: Vec<SeedRecord> = iters
        .iter()
        .map(|r| SeedRecord { n: r.n, trial: r.rep, seed: r.seed })
        .collect();
    write_manifest(spec, workers, &file_names(&files), &seeds, started, &cells)?;
    Ok(TimingOutcome {
        cells,
        diverged: iters.iter().filter(|r| r.diverged).count(),
        files,
    })
}

pub(crate) fn plot(dir: &Path) -> Result<PathBuf> {
    let cells: Vec<TimingCell> = read_csv(&dir.join("timing_summary.csv"))?;
    let mut p = LinePlot::new("Median wall time to dist <= gamma", "n", "seconds");
    p.log_x = true;
    p.log_y = true;
    p.series.push(
        Series::line("spectral start (dense)", cells.iter().map(|c| (c.n as f64, c.spectral_median)).collect())
            .with_markers(),
    );
    p.series.push(
        Series::line("spectral start (matrix-free)", cells.iter().map(|c| (c.n as f64, c.matrix_free_median)).collect())
            .dashed()
            .with_markers(),
    );
    p.series.push(
        Series::line("random-start RWF", cells.iter().map(|c| (c.n as f64, c.rwf_median)).collect())
            .with_markers(),
    );
    let path = dir.join("timing.svg");
    p.save(&path)?;
    Ok(path)
}
