//! `ω_k` over the first phase.

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::svg::{LinePlot, Series};
use super::{
    build_problem, file_names, prepare_dir, read_csv, run_pool, run_trial, schedule, worker_count,
    write_csv, write_manifest, ExperimentSpec, SeedRecord,
};
use crate::analysis::{detect_landmarks, fraction_non_decreasing};
use crate::error::Result;
use crate::stats::median;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct OmegaRow {
    n: usize,
    trial: usize,
    k: usize,
    omega: f64,
    tan_omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaTrial {
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub t_gamma: Option<usize>,
    /// Recorded steps `k → k+1` up to `T_γ` (or the whole run when the ball
    /// is never reached).
    pub steps: usize,
    pub non_decreasing_fraction: f64,
    pub tan_omega0: f64,
    pub final_omega: f64,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmegaOutcome {
    pub trials: Vec<OmegaTrial>,
    pub diverged: usize,
    pub files: Vec<PathBuf>,
}

impl OmegaOutcome {
    pub fn median_non_decreasing(&self, n: usize) -> f64 {
        let v: Vec<f64> = self
            .trials
            .iter()
            .filter(|t| t.n == n)
            .map(|t| t.non_decreasing_fraction)
            .collect();
        median(&v)
    }

    pub fn median_tan_omega0(&self, n: usize) -> f64 {
        let v: Vec<f64> = self.trials.iter().filter(|t| t.n == n).map(|t| t.tan_omega0).collect();
        median(&v)
    }
}

/// `1/√(n ln n)`, the scale of `tan ω₀` under a random start.
pub fn tan_omega0_scale(n: usize) -> f64 {
    let nf = n as f64;
    1.0 / (nf * nf.ln()).sqrt()
}

pub fn cmd_omega_trace(spec: &ExperimentSpec) -> Result<OmegaOutcome> {
    spec.validate()?;
    let started = Instant::now();
    let dir = spec.output_dir.as_path();
    prepare_dir(dir)?;
    let workers = worker_count(spec.workers)?;

    let mut results = run_pool(workers, schedule(&spec.dims, spec.trials), |(n, trial)| {
        let seed = spec.trial_seed(n, trial);
        let p = build_problem(n, spec.block_samples(n), spec.blocks, seed)?;
        let run = run_trial(&spec.rwf_config(spec.tol), &p.ensemble, &p.z0, &p.x)?;
        let t_gamma = detect_landmarks(&run.trace, spec.gamma, spec.delta).t_gamma;
        let end = t_gamma.unwrap_or(usize::MAX);
        let rows: Vec<OmegaRow> = run
            .trace
            .rows()
            .iter()
            .take_while(|r| r.k <= end)
            .map(|r| OmegaRow {
                n,
                trial,
                k: r.k,
                omega: r.omega,
                tan_omega: r.omega.tan(),
            })
            .collect();
        let omegas: Vec<f64> = rows.iter().map(|r| r.omega).collect();
        let summary = OmegaTrial {
            n,
            trial,
            seed,
            t_gamma,
            steps: omegas.len().saturating_sub(1),
            non_decreasing_fraction: fraction_non_decreasing(&omegas),
            tan_omega0: rows.first().map_or(f64::NAN, |r| r.tan_omega),
            final_omega: omegas.last().copied().unwrap_or(f64::NAN),
            diverged: run.diverged,
        };
        Ok((summary, rows))
    })?;
    results.sort_by_key(|(t, _)| (t.n, t.trial));
    let (trials, rows): (Vec<OmegaTrial>, Vec<Vec<OmegaRow>>) = results.into_iter().unzip();
    let rows: Vec<OmegaRow> = rows.into_iter().flatten().collect();

    let trace_path = dir.join("omega.csv");
    let summary_path = dir.join("omega_summary.csv");
    write_csv(&trace_path, &rows)?;
    write_csv(&summary_path, &trials)?;
    let svg = plot(dir)?;
    let files = vec![trace_path, summary_path, svg];

    let seeds: Vec<SeedRecord> = trials
        .iter()
        .map(|t| SeedRecord { n: t.n, trial: t.trial, seed: t.seed })
        .collect();
    let outcome = OmegaOutcome {
        diverged: trials.iter().filter(|t| t.diverged).count(),
        trials,
        files,
    };
    let mut dims = spec.dims.clone();
    dims.sort_unstable();
    dims.dedup();
    let summary: Vec<serde_json::Value> = dims
        .iter()
        .map(|&n| {
            serde_json::json!({
                "n": n,
                "median_non_decreasing_fraction": outcome.median_non_decreasing(n),
                "median_tan_omega0": outcome.median_tan_omega0(n),
                "tan_omega0_scale": tan_omega0_scale(n),
            })
        })
        .collect();
    write_manifest(spec, workers, &file_names(&outcome.files), &seeds, started, &summary)?;
    Ok(outcome)
}

pub(crate) fn plot(dir: &Path) -> Result<PathBuf> {
    let rows: Vec<OmegaRow> = read_csv(&dir.join("omega.csv"))?;
    let trials: Vec<OmegaTrial> = read_csv(&dir.join("omega_summary.csv"))?;
    let mut p = LinePlot::new("omega_k during the first phase", "iteration k", "omega_k (rad)");
    let kmax = rows.iter().map(|r| r.k).max().unwrap_or(1) as f64;
    p.series.push(Series::line("pi/2", vec![(0.0, FRAC_PI_2), (kmax, FRAC_PI_2)]).dashed());
    for t in &trials {
        let pts = rows
            .iter()
            .filter(|r| r.n == t.n && r.trial == t.trial)
            .map(|r| (r.k as f64, r.omega))
            .collect();
        p.series.push(Series::line(format!("n = {} trial {}", t.n, t.trial), pts));
    }
    p.legend_limit = Some(4.min(p.series.len()));
    let path = dir.join("omega.svg");
    p.save(&path)?;
    Ok(path)
}
