//! Closed-form expected update against a Monte-Carlo estimate.

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::svg::{LinePlot, Series};
use super::{
    file_names, prepare_dir, purpose, read_csv, run_pool, sub_seed, worker_count, write_csv,
    write_manifest, ExperimentSpec, SeedRecord,
};
use crate::analysis::{expected_update, mc_expectation_oracle};
use crate::error::Result;
use crate::{linalg, rng, Signal};

/// Band half-width in standard errors.
pub const BAND_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma3Cell {
    pub cell: usize,
    pub n: usize,
    /// Angle between `z` and `x` (radians).
    pub theta: f64,
    pub z_norm: f64,
    pub samples: usize,
    pub seed: u64,
    pub components: usize,
    pub within_band: usize,
    pub max_abs_error: f64,
    pub max_z_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma3Outcome {
    /// Grid cells with `θ ∈ (0, π/2)`, then one aligned cell (`θ = 0`).
    pub cells: Vec<Lemma3Cell>,
    pub files: Vec<PathBuf>,
}

impl Lemma3Outcome {
    /// `(components within the band, components)` over the open-angle grid.
    pub fn grid_pass(&self) -> (usize, usize) {
        self.cells
            .iter()
            .filter(|c| c.theta > 0.0)
            .fold((0, 0), |(w, t), c| (w + c.within_band, t + c.components))
    }

    pub fn aligned(&self) -> Option<&Lemma3Cell> {
        self.cells.iter().find(|c| c.theta == 0.0)
    }
}

/// `(x, z)` with unit `x`, `∠(z, x) = θ` and `‖z‖ = norm`.
fn pair(n: usize, theta: f64, norm: f64, seed: u64) -> Result<(Signal, Signal)> {
    let x = Signal::random_unit(n, sub_seed(seed, purpose::SIGNAL))?;
    let mut u: Vec<f64> = rng::gaussian_vec(n, 1.0, sub_seed(seed, purpose::START));
    let c = linalg::dot(&u, x.as_slice());
    linalg::axpy(-c, x.as_slice(), &mut u);
    let un = linalg::norm(&u);
    linalg::scale(1.0 / un, &mut u);
    let z: Vec<f64> = x
        .as_slice()
        .iter()
        .zip(&u)
        .map(|(xi, ui)| norm * (theta.cos() * xi + theta.sin() * ui))
        .collect();
    Ok((x, Signal::new(z)?))
}

pub fn cmd_lemma3_check(spec: &ExperimentSpec) -> Result<Lemma3Outcome> {
    spec.validate()?;
    let started = Instant::now();
    let dir = spec.output_dir.as_path();
    prepare_dir(dir)?;
    let workers = worker_count(spec.workers)?;
    let mut dims = spec.dims.clone();
    dims.sort_unstable();
    dims.dedup();

    let grid = spec.trials;
    let cells: Vec<(usize, usize, f64)> = (0..=grid)
        .map(|i| {
            let n = dims[i % dims.len()];
            let theta = if i < grid { (i as f64 + 0.5) / grid as f64 * FRAC_PI_2 } else { 0.0 };
            (i, n, theta)
        })
        .collect();
    let results = run_pool(workers, cells, |(cell, n, theta)| {
        let seed = spec.trial_seed(n, cell);
        let norm = 0.5 + 0.25 * (cell % 7) as f64;
        let (x, z) = pair(n, theta, norm, seed)?;
        let closed = expected_update(&z, &x)?;
        let mc = mc_expectation_oracle(&z, &x, spec.samples, sub_seed(seed, purpose::MONTE_CARLO))?;
        let mut within = 0;
        let mut max_err: f64 = 0.0;
        let mut max_z: f64 = 0.0;
        for ((c, m), se) in closed.mean.iter().zip(&mc.mean).zip(&mc.std_error) {
            let err = (c - m).abs();
            max_err = max_err.max(err);
            let zs = if *se > 0.0 { err / se } else if err == 0.0 { 0.0 } else { f64::INFINITY };
            max_z = max_z.max(zs);
            if err <= BAND_SIGMAS * se {
                within += 1;
            }
        }
        Ok(Lemma3Cell {
            cell,
            n,
            theta,
            z_norm: norm,
            samples: spec.samples,
            seed,
            components: n,
            within_band: within,
            max_abs_error: max_err,
            max_z_score: max_z,
        })
    })?;
    let mut cells = results;
    cells.sort_by_key(|c| c.cell);

    let path = dir.join("lemma3.csv");
    write_csv(&path, &cells)?;
    let svg = plot(dir)?;
    let files = vec![path, svg];
    let seeds: Vec<SeedRecord> = cells
        .iter()
        .map(|c| SeedRecord { n: c.n, trial: c.cell, seed: c.seed })
        .collect();
    let outcome = Lemma3Outcome { cells, files };
    let (w, t) = outcome.grid_pass();
    let summary = serde_json::json!({
        "grid_components_within_band": w,
        "grid_components": t,
        "aligned_max_abs_error": outcome.aligned().map(|c| c.max_abs_error),
    });
    write_manifest(spec, workers, &file_names(&outcome.files), &seeds, started, &summary)?;
    Ok(outcome)
}

pub(crate) fn plot(dir: &Path) -> Result<PathBuf> {
    let cells: Vec<Lemma3Cell> = read_csv(&dir.join("lemma3.csv"))?;
    let mut p = LinePlot::new("Closed form vs Monte Carlo", "theta (rad)", "max |z-score| per cell");
    let mut pts: Vec<(f64, f64)> = cells.iter().map(|c| (c.theta, c.max_z_score)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    p.series.push(Series::line("max z-score", pts).with_markers());
    let hi = cells.iter().map(|c| c.theta).fold(0.0, f64::max);
    p.series.push(Series::line("3 sigma", vec![(0.0, BAND_SIGMAS), (hi, BAND_SIGMAS)]).dashed());
    let path = dir.join("lemma3.svg");
    p.save(&path)?;
    Ok(path)
}
