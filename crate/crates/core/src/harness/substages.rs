//! `α_t`, `β_t` with the first-phase landmark times.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::svg::{LinePlot, Series};
use super::{
    build_problem, file_names, prepare_dir, read_csv, run_pool, run_trial, schedule, worker_count,
    write_csv, write_manifest, ExperimentSpec, SeedRecord,
};
use crate::analysis::{detect_landmarks, TraceRow};
use crate::error::Result;

/// Slack around the `[1/3, 3/4]` band for `β` between `T_11` and `T_1`.
pub const BETA_BAND_SLACK: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CurveRow {
    trial: usize,
    k: usize,
    alpha: f64,
    beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubstageTrial {
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub t_11: Option<usize>,
    pub t_1: Option<usize>,
    pub t_gamma2: Option<usize>,
    pub t_omega: Option<usize>,
    pub t_gamma: Option<usize>,
    pub ordered: bool,
    /// Share of `t ∈ (T_11, T_1]` with `β_t` inside the slackened band.
    pub beta_band_fraction: f64,
    /// Share of `t ∈ [0, T_11]` with `|α_{t+1}| > |α_t|`.
    pub alpha_increase_fraction: f64,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubstagesOutcome {
    pub trials: Vec<SubstageTrial>,
    pub diverged: usize,
    pub files: Vec<PathBuf>,
}

fn beta_band_fraction(rows: &[TraceRow], t_11: usize, t_1: usize) -> f64 {
    let (lo, hi) = (1.0 / 3.0 - BETA_BAND_SLACK, 0.75 + BETA_BAND_SLACK);
    let window: Vec<&TraceRow> = rows.iter().filter(|r| r.k > t_11 && r.k <= t_1).collect();
    if window.is_empty() {
        return 1.0;
    }
    window.iter().filter(|r| (lo..=hi).contains(&r.beta)).count() as f64 / window.len() as f64
}

fn alpha_increase_fraction(rows: &[TraceRow], t_11: usize) -> f64 {
    let pairs: Vec<bool> = rows
        .windows(2)
        .filter(|w| w[0].k <= t_11)
        .map(|w| w[1].alpha.abs() > w[0].alpha.abs())
        .collect();
    if pairs.is_empty() {
        return 1.0;
    }
    pairs.iter().filter(|&&b| b).count() as f64 / pairs.len() as f64
}

pub fn cmd_substages(spec: &ExperimentSpec) -> Result<SubstagesOutcome> {
    spec.validate()?;
    let started = Instant::now();
    let dir = spec.output_dir.as_path();
    prepare_dir(dir)?;
    let workers = worker_count(spec.workers)?;

    let mut results = run_pool(workers, schedule(&spec.dims, spec.trials), |(n, trial)| {
        let seed = spec.trial_seed(n, trial);
        let p = build_problem(n, spec.block_samples(n), spec.blocks, seed)?;
        let run = run_trial(&spec.rwf_config(spec.tol), &p.ensemble, &p.z0, &p.x)?;
        let l = detect_landmarks(&run.trace, spec.gamma, spec.delta);
        let rows = run.trace.rows();
        let summary = SubstageTrial {
            n,
            trial,
            seed,
            t_11: l.t_11,
            t_1: l.t_1,
            t_gamma2: l.t_gamma2,
            t_omega: l.t_omega,
            t_gamma: l.t_gamma,
            ordered: l.ordered(),
            beta_band_fraction: match (l.t_11, l.t_1) {
                (Some(a), Some(b)) => beta_band_fraction(rows, a, b),
                _ => f64::NAN,
            },
            alpha_increase_fraction: l.t_11.map_or(f64::NAN, |a| alpha_increase_fraction(rows, a)),
            diverged: run.diverged,
        };
        let curves: Vec<CurveRow> = rows
            .iter()
            .map(|r| CurveRow {
                trial,
                k: r.k,
                alpha: r.alpha,
                beta: r.beta,
            })
            .collect();
        Ok((summary, curves))
    })?;
    results.sort_by_key(|(t, _)| (t.n, t.trial));
    let (trials, curves): (Vec<SubstageTrial>, Vec<Vec<CurveRow>>) = results.into_iter().unzip();
    let curves: Vec<CurveRow> = curves.into_iter().flatten().collect();

    let curve_path = dir.join("substages.csv");
    let landmark_path = dir.join("landmarks.csv");
    write_csv(&curve_path, &curves)?;
    write_csv(&landmark_path, &trials)?;
    let svg = plot(dir)?;
    let files = vec![curve_path, landmark_path, svg];
    let seeds: Vec<SeedRecord> = trials
        .iter()
        .map(|t| SeedRecord { n: t.n, trial: t.trial, seed: t.seed })
        .collect();
    write_manifest(spec, workers, &file_names(&files), &seeds, started, &trials)?;
    Ok(SubstagesOutcome {
        diverged: trials.iter().filter(|t| t.diverged).count(),
        trials,
        files,
    })
}

pub(crate) fn plot(dir: &Path) -> Result<PathBuf> {
    let curves: Vec<CurveRow> = read_csv(&dir.join("substages.csv"))?;
    let trials: Vec<SubstageTrial> = read_csv(&dir.join("landmarks.csv"))?;
    let first = trials.first();
    let title = first.map_or("Sub-stages".to_string(), |t| format!("Sub-stages, n = {}", t.n));
    let mut p = LinePlot::new(title, "iteration t", "value");
    let trial = first.map_or(0, |t| t.trial);
    let end = first.and_then(|t| t.t_gamma).map_or(usize::MAX, |t| t + 5);
    let pick = |f: fn(&CurveRow) -> f64| -> Vec<(f64, f64)> {
        curves
            .iter()
            .filter(|r| r.trial == trial && r.k <= end)
            .map(|r| (r.k as f64, f(r)))
            .collect()
    };
    p.series.push(Series::line("|alpha_t|", pick(|r| r.alpha.abs())));
    p.series.push(Series::line("beta_t", pick(|r| r.beta)));
    if let Some(t) = first {
        for (v, name) in [(t.t_11, "T_11"), (t.t_1, "T_1"), (t.t_gamma2, "T_gamma2"), (t.t_gamma, "T_gamma")] {
            if let Some(v) = v {
                p.vlines.push((v as f64, name.to_string()));
            }
        }
    }
    let path = dir.join("substages.svg");
    p.save(&path)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(k: usize, alpha: f64, beta: f64) -> TraceRow {
        TraceRow { k, alpha, beta, r: 0.0, omega: 0.0, dist_rel: 0.0, loss: 0.0 }
    }

    #[test]
    fn window_fractions() {
        let rows: Vec<TraceRow> = [(0.01, 1.0), (0.02, 0.9), (0.015, 0.7), (0.1, 0.5), (0.3, 0.2)]
            .iter()
            .enumerate()
            .map(|(k, &(a, b))| row(k, a, b))
            .collect();
        // pairs starting at k = 0, 1, 2: up, down, up
        assert!((alpha_increase_fraction(&rows, 2) - 2.0 / 3.0).abs() < 1e-12);
        // k in (1, 4]: 0.7, 0.5 inside [0.233, 0.85]; 0.2 outside
        assert!((beta_band_fraction(&rows, 1, 4) - 2.0 / 3.0).abs() < 1e-12);
    }
}
