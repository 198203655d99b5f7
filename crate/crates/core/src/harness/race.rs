//! RWF against WF from a shared random start.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::svg::{LinePlot, Series};
use super::{
    build_problem, file_names, prepare_dir, read_csv, run_pool, run_trial, schedule, worker_count,
    write_csv, write_manifest, ExperimentSpec, SeedRecord,
};
use crate::error::Result;
use crate::solver::{Algorithm, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CurveRow {
    n: usize,
    trial: usize,
    algorithm: String,
    k: usize,
    dist_rel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaceTrial {
    pub n: usize,
    pub m: usize,
    pub blocks: usize,
    pub trial: usize,
    pub seed: u64,
    /// Updates until `dist ≤ tol`; empty when the cap was hit first.
    pub rwf_iterations: Option<usize>,
    pub wf_iterations: Option<usize>,
    /// WF iteration cap actually used.
    pub wf_cap: usize,
    pub rwf_faster: bool,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RaceOutcome {
    pub trials: Vec<RaceTrial>,
    pub diverged: usize,
    pub files: Vec<PathBuf>,
}

impl RaceOutcome {
    /// `(RWF strictly faster, trials)` at dimension `n`.
    pub fn wins(&self, n: usize) -> (usize, usize) {
        Self::wins_in(&self.trials, n)
    }

    fn wins_in(trials: &[RaceTrial], n: usize) -> (usize, usize) {
        let t: Vec<&RaceTrial> = trials.iter().filter(|t| t.n == n).collect();
        (t.iter().filter(|t| t.rwf_faster).count(), t.len())
    }
}

pub fn cmd_race(spec: &ExperimentSpec) -> Result<RaceOutcome> {
    spec.validate()?;
    let started = Instant::now();
    let dir = spec.output_dir.as_path();
    prepare_dir(dir)?;
    let workers = worker_count(spec.workers)?;

    let results = run_pool(workers, schedule(&spec.dims, spec.trials), |(n, trial)| {
        let seed = spec.trial_seed(n, trial);
        let p = build_problem(n, spec.block_samples(n), spec.blocks, seed)?;
        let rwf = run_trial(&spec.rwf_config(spec.tol), &p.ensemble, &p.z0, &p.x)?;
        let rwf_hit = rwf.converged.then_some(rwf.iterations);
        // WF sees the first block only: the same samples RWF uses at k = 0
        let wf_cap = match (spec.truncate_wf, rwf_hit) {
            (true, Some(k)) => k,
            _ => spec.wf_max_iters,
        };
        let wf_cfg = SolverConfig {
            tol: spec.tol,
            gamma: spec.gamma,
            delta: spec.delta,
            max_iters: wf_cap,
            ..SolverConfig::wf(spec.mu_wf)
        };
        let first = p.ensemble.view(0..p.per_block)?;
        let wf = run_trial(&wf_cfg, &first, &p.z0, &p.x)?;
        let wf_hit = wf.converged.then_some(wf.iterations);
        let rwf_faster = match (rwf_hit, wf_hit) {
            (Some(r), Some(w)) => r < w,
            (Some(_), None) => true,
            _ => false,
        };
        let mut curves = Vec::with_capacity(rwf.trace.len() + wf.trace.len());
        for (alg, run) in [(Algorithm::Rwf, &rwf), (Algorithm::Wf, &wf)] {
            curves.extend(run.trace.rows().iter().map(|r| CurveRow {
                n,
                trial,
                algorithm: alg.label().to_string(),
                k: r.k,
                dist_rel: r.dist_rel,
            }));
        }
        let row = RaceTrial {
            n,
            m: p.per_block,
            blocks: spec.blocks,
            trial,
            seed,
            rwf_iterations: rwf_hit,
            wf_iterations: wf_hit,
            wf_cap,
            rwf_faster,
            diverged: rwf.diverged || wf.diverged,
        };
        Ok((row, curves))
    })?;

    let mut results = results;
    results.sort_by_key(|(r, _)| (r.n, r.trial));
    let (trials, curves): (Vec<RaceTrial>, Vec<Vec<CurveRow>>) = results.into_iter().unzip();
    let curves: Vec<CurveRow> = curves.into_iter().flatten().collect();

    let curve_path = dir.join("race.csv");
    let summary_path = dir.join("race_summary.csv");
    write_csv(&curve_path, &curves)?;
    write_csv(&summary_path, &trials)?;
    let svg = plot(dir)?;
    let files = vec![curve_path, summary_path, svg];

    let seeds: Vec<SeedRecord> = trials
        .iter()
        .map(|t| SeedRecord { n: t.n, trial: t.trial, seed: t.seed })
        .collect();
    let mut dims = spec.dims.clone();
    dims.sort_unstable();
    dims.dedup();
    let summary: Vec<serde_json::Value> = dims
        .iter()
        .map(|&n| {
            let (w, t) = RaceOutcome::wins_in(&trials, n);
            serde_json::json!({ "n": n, "rwf_faster": w, "trials": t })
        })
        .collect();
    write_manifest(spec, workers, &file_names(&files), &seeds, started, &summary)?;
    let diverged = trials.iter().filter(|t| t.diverged).count();
    Ok(RaceOutcome { trials, diverged, files })
}

pub(crate) fn plot(dir: &Path) -> Result<PathBuf> {
    let rows: Vec<CurveRow> = read_csv(&dir.join("race.csv"))?;
    let mut dims: Vec<usize> = rows.iter().map(|r| r.n).collect();
    dims.sort_unstable();
    dims.dedup();
    let mut p = LinePlot::new("Relative distance, trial 0", "iteration k", "dist(z_k, x) / |x|");
    p.log_y = true;
    for alg in ["rwf", "wf"] {
        for &n in &dims {
            let pts = rows
                .iter()
                .filter(|r| r.n == n && r.trial == 0 && r.algorithm == alg)
                .map(|r| (r.k as f64, r.dist_rel))
                .collect();
            let s = Series::line(format!("{} n = {n}", alg.to_uppercase()), pts);
            p.series.push(if alg == "wf" { s.dashed() } else { s });
        }
    }
    let path = dir.join("race.svg");
    p.save(&path)?;
    Ok(path)
}
