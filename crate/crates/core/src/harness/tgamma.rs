//! `T_γ` against `n` for two neighborhood radii.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::svg::{LinePlot, Series};
use super::{
    build_problem, censored, file_names, prepare_dir, read_csv, run_pool, run_trial, schedule,
    worker_count, write_csv, write_manifest, ExperimentSpec, SeedRecord,
};
use crate::analysis::detect_landmarks;
use crate::error::Result;
use crate::stats::{least_squares, Summary};

/// The coarse radius always reported next to `spec.gamma`.
pub const COARSE_GAMMA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TrialRow {
    n: usize,
    m: usize,
    blocks: usize,
    trial: usize,
    seed: u64,
    gamma: f64,
    t_gamma: Option<usize>,
    iterations: usize,
    diverged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TgammaCell {
    pub n: usize,
    pub gamma: f64,
    /// Median `T_γ`; trials that never reach the ball count as `+∞`.
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub hits: usize,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TgammaOutcome {
    pub cells: Vec<TgammaCell>,
    pub diverged: usize,
    pub files: Vec<PathBuf>,
}

impl TgammaOutcome {
    pub fn median(&self, n: usize, gamma: f64) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.n == n && c.gamma == gamma)
            .map(|c| c.median)
    }
}

fn gammas(spec: &ExperimentSpec) -> Vec<f64> {
    let mut g = vec![COARSE_GAMMA, spec.gamma];
    g.dedup();
    g
}

pub fn cmd_tgamma_sweep(spec: &ExperimentSpec) -> Result<TgammaOutcome> {
    spec.validate()?;
    let started = Instant::now();
    let dir = spec.output_dir.as_path();
    prepare_dir(dir)?;
    let workers = worker_count(spec.workers)?;
    let gammas = gammas(spec);

    let tasks = schedule(&spec.dims, spec.trials);
    let per_trial = run_pool(workers, tasks, |(n, trial)| {
        let seed = spec.trial_seed(n, trial);
        let p = build_problem(n, spec.block_samples(n), spec.blocks, seed)?;
        let run = run_trial(&spec.rwf_config(spec.tol), &p.ensemble, &p.z0, &p.x)?;
        let rows: Vec<TrialRow> = gammas
            .iter()
            .map(|&g| TrialRow {
                n,
                m: p.per_block,
                blocks: spec.blocks,
                trial,
                seed,
                gamma: g,
                t_gamma: detect_landmarks(&run.trace, g, spec.delta).t_gamma,
                iterations: run.iterations,
                diverged: run.diverged,
            })
            .collect();
        Ok(rows)
    })?;
    let mut rows: Vec<TrialRow> = per_trial.into_iter().flatten().collect();
    rows.sort_by(|a, b| (a.n, a.trial).cmp(&(b.n, b.trial)).then(b.gamma.total_cmp(&a.gamma)));

    let mut dims = spec.dims.clone();
    dims.sort_unstable();
    dims.dedup();
    let mut cells = Vec::new();
    for &n in &dims {
        for &g in &gammas {
            let vals: Vec<f64> = rows
                .iter()
                .filter(|r| r.n == n && r.gamma == g)
                .map(|r| censored(r.t_gamma))
                .collect();
            let s = Summary::of(&vals);
            cells.push(TgammaCell {
                n,
                gamma: g,
                median: s.median,
                q1: s.q1,
                q3: s.q3,
                hits: vals.iter().filter(|v| v.is_finite()).count(),
                trials: vals.len(),
            });
        }
    }

    let trials_path = dir.join("tgamma_trials.csv");
    let summary_path = dir.join("tgamma.csv");
    write_csv(&trials_path, &rows)?;
    write_csv(&summary_path, &cells)?;
    let svg = plot(dir)?;
    let files = vec![summary_path, trials_path, svg];

    let seeds: Vec<SeedRecord> = rows
        .iter()
        .filter(|r| r.gamma == gammas[0])
        .map(|r| SeedRecord { n: r.n, trial: r.trial, seed: r.seed })
        .collect();
    let diverged = rows.iter().filter(|r| r.gamma == gammas[0] && r.diverged).count();
    write_manifest(spec, workers, &file_names(&files), &seeds, started, &cells)?;
    Ok(TgammaOutcome { cells, diverged, files })
}

pub(crate) fn plot(dir: &Path) -> Result<PathBuf> {
    let cells: Vec<TgammaCell> = read_csv(&dir.join("tgamma.csv"))?;
    let mut gammas: Vec<f64> = cells.iter().map(|c| c.gamma).collect();
    gammas.sort_by(|a, b| b.total_cmp(a));
    gammas.dedup();
    let mut p = LinePlot::new("Median T_gamma vs n", "n", "median T_gamma");
    for &g in &gammas {
        let pts = cells
            .iter()
            .filter(|c| c.gamma == g)
            .map(|c| (c.n as f64, c.median))
            .collect();
        p.series.push(Series::line(format!("gamma = {g}"), pts).with_markers());
    }
    // a + b ln n fitted to the finest radius
    if let Some(&g) = gammas.last() {
        let fin: Vec<&TgammaCell> = cells
            .iter()
            .filter(|c| c.gamma == g && c.median.is_finite())
            .collect();
        let x: Vec<Vec<f64>> = fin.iter().map(|c| vec![(c.n as f64).ln()]).collect();
        let y: Vec<f64> = fin.iter().map(|c| c.median).collect();
        if let Some((coef, _)) = least_squares(&x, &y) {
            let lo = fin.iter().map(|c| c.n).min().unwrap_or(1) as f64;
            let hi = fin.iter().map(|c| c.n).max().unwrap_or(1) as f64;
            let pts = (0..=40)
                .map(|i| {
                    let n = lo + (hi - lo) * i as f64 / 40.0;
                    (n, coef[0] * n.ln() + coef[1])
                })
                .collect();
            p.series.push(
                Series::line(format!("{:.2} ln n + {:.2}", coef[0], coef[1]), pts).dashed(),
            );
        }
    }
    let path = dir.join("tgamma.svg");
    p.save(&path)?;
    Ok(path)
}
