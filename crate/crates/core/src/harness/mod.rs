//! Seeded experiment drivers.
//!
//! Each `cmd_*` writes its CSV tables, `manifest.json` and an SVG chart into
//! [`ExperimentSpec::output_dir`]. Charts are drawn from the CSV files alone,
//! so [`regenerate_plot`] can redraw them without re-running anything.
//!
//! Randomness is keyed by `(master seed, experiment, n, trial)`; rows are
//! sorted by `(n, trial)` before writing, so the CSV bytes do not depend on the
//! number of workers.

mod lemma3;
mod omega;
mod race;
mod state_evolution;
mod substages;
pub mod svg;
mod tgamma;
mod timing;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::analysis::IterateTrace;
use crate::ensemble::{generate_gaussian_ensemble, Measurements};
use crate::error::{param, Error, Result};
use crate::init::random_init;
use crate::rng::derive_seed;
use crate::solver::{self, SolverConfig};
use crate::Signal;

pub use lemma3::{cmd_lemma3_check, Lemma3Cell, Lemma3Outcome};
pub use omega::{cmd_omega_trace, tan_omega0_scale, OmegaOutcome, OmegaTrial};
pub use race::{cmd_race, RaceOutcome, RaceTrial};
pub use state_evolution::{cmd_state_evolution, StateEvolutionOutcome};
pub use substages::{cmd_substages, SubstageTrial, SubstagesOutcome};
pub use tgamma::{cmd_tgamma_sweep, TgammaCell, TgammaOutcome, COARSE_GAMMA};
pub use timing::{cmd_timing, TimingCell, TimingOutcome};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "PHASEFLOW_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    TgammaSweep,
    Race,
    OmegaTrace,
    Timing,
    Substages,
    StateEvolution,
    Lemma3Check,
}

impl ExperimentKind {
    pub const ALL: [Self; 7] = [
        Self::TgammaSweep,
        Self::Race,
        Self::OmegaTrace,
        Self::Timing,
        Self::Substages,
        Self::StateEvolution,
        Self::Lemma3Check,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::TgammaSweep => "tgamma_sweep",
            Self::Race => "race",
            Self::OmegaTrace => "omega_trace",
            Self::Timing => "timing",
            Self::Substages => "substages",
            Self::StateEvolution => "state_evolution",
            Self::Lemma3Check => "lemma3_check",
        }
    }

    /// Stem shared by the main CSV and the SVG chart.
    pub fn stem(self) -> &'static str {
        match self {
            Self::TgammaSweep => "tgamma",
            Self::Race => "race",
            Self::OmegaTrace => "omega",
            Self::Timing => "timing",
            Self::Substages => "substages",
            Self::StateEvolution => "state_evolution",
            Self::Lemma3Check => "lemma3",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.replace('-', "_");
        Self::ALL.into_iter().find(|k| k.name() == s || k.stem() == s)
    }

    fn id(self) -> u64 {
        self as u64 + 1
    }
}

/// Parameters for one experiment. [`ExperimentSpec::new`] fills in the
/// defaults for each kind; every field can be overridden.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub dims: Vec<usize>,
    /// Samples per block divided by `n`.
    pub oversampling: f64,
    pub trials: usize,
    pub gamma: f64,
    pub delta: f64,
    pub mu_rwf: f64,
    pub mu_wf: f64,
    /// Block count `K`. The ensemble holds `K` blocks of `oversampling · n`
    /// fresh samples each, cycled as `k mod K`.
    pub blocks: usize,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub max_iters: usize,
    pub wf_max_iters: usize,
    pub tol: f64,
    /// Timing repetitions per `n`.
    pub reps: usize,
    /// Monte-Carlo samples per expected-update cell.
    pub samples: usize,
    pub track_dim: usize,
    pub track_samples: usize,
    pub track_iters: usize,
    /// Race only: cap each WF run at the iteration count of its RWF partner.
    pub truncate_wf: bool,
    /// Worker threads; `None` reads [`WORKERS_ENV`], then the machine default.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind, output_dir: impl Into<PathBuf>) -> Self {
        let base = Self {
            kind,
            dims: vec![100],
            oversampling: 10.0,
            trials: 50,
            gamma: 0.1,
            delta: crate::analysis::DEFAULT_DELTA,
            mu_rwf: 0.5,
            mu_wf: 0.1,
            blocks: 3,
            master_seed: 42,
            output_dir: output_dir.into(),
            max_iters: 500,
            wf_max_iters: 2000,
            tol: 1e-3,
            reps: 5,
            samples: 1_000_000,
            track_dim: 64,
            track_samples: 500_000,
            track_iters: 10,
            truncate_wf: false,
            workers: None,
        };
        match kind {
            ExperimentKind::TgammaSweep => Self {
                dims: vec![100, 200, 500, 1000, 2000],
                ..base
            },
            ExperimentKind::Race => Self {
                dims: vec![100, 200, 500],
                tol: 1e-5,
                ..base
            },
            ExperimentKind::OmegaTrace => Self {
                dims: vec![500],
                trials: 20,
                ..base
            },
            ExperimentKind::Timing => Self {
                dims: vec![500, 1000, 2000, 4000],
                ..base
            },
            ExperimentKind::Substages => Self {
                dims: vec![1200],
                oversampling: 12.0,
                trials: 1,
                ..base
            },
            ExperimentKind::StateEvolution => Self {
                dims: vec![100, 1_000, 10_000, 100_000, 1_000_000],
                blocks: 1,
                trials: 1,
                ..base
            },
            ExperimentKind::Lemma3Check => Self {
                dims: (2..=16).collect(),
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            return param("at least one dimension is required");
        }
        if let Some(n) = self.dims.iter().find(|&&n| n < 2) {
            return param(format!("dimensions must be >= 2, got {n}"));
        }
        if self.trials == 0 {
            return param("trials must be >= 1");
        }
        if !(self.oversampling >= 1.0) || !self.oversampling.is_finite() {
            return param(format!("oversampling must be >= 1, got {}", self.oversampling));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return param(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if !(self.tol > 0.0 && self.tol < self.gamma) {
            return param(format!("tol must lie in (0, gamma), got {}", self.tol));
        }
        if self.blocks == 0 {
            return param("block count must be >= 1");
        }
        if self.reps == 0 {
            return param("repetitions must be >= 1");
        }
        if self.samples < 1000 {
            return param("Monte-Carlo samples must be >= 1000");
        }
        if self.track_dim < 2 || self.track_samples < self.track_dim {
            return param("tracking run needs n >= 2 and m >= n");
        }
        if self.workers == Some(0) {
            return param("worker count must be >= 1");
        }
        self.rwf_config(self.tol).validate()?;
        SolverConfig {
            mu: self.mu_wf,
            ..SolverConfig::wf(self.mu_wf)
        }
        .validate()
    }

    /// Samples per block for dimension `n`.
    pub fn block_samples(&self, n: usize) -> usize {
        ((self.oversampling * n as f64).round() as usize).max(1)
    }

    pub(crate) fn rwf_config(&self, tol: f64) -> SolverConfig {
        SolverConfig {
            mu: self.mu_rwf,
            gamma: self.gamma,
            delta: self.delta,
            blocks: self.blocks,
            max_iters: self.max_iters,
            tol,
            seed: self.master_seed,
            ..SolverConfig::default()
        }
    }

    /// Seed for trial `trial` of cell `n`.
    pub fn trial_seed(&self, n: usize, trial: usize) -> u64 {
        derive_seed(self.master_seed, &[self.kind.id(), n as u64, trial as u64])
    }
}

/// Sub-seed labels under a trial seed.
pub(crate) mod purpose {
    pub const ENSEMBLE: u64 = 1;
    pub const SIGNAL: u64 = 2;
    pub const START: u64 = 3;
    pub const POWER: u64 = 4;
    pub const MONTE_CARLO: u64 = 5;
}

pub(crate) fn sub_seed(trial_seed: u64, purpose: u64) -> u64 {
    derive_seed(trial_seed, &[purpose])
}

/// Unit ground truth, observed ensemble of `blocks · per_block` rows and a
/// random start, all derived from one trial seed.
pub struct Problem {
    pub x: Signal,
    pub ensemble: crate::Measurements,
    pub z0: Signal,
    pub per_block: usize,
}

pub fn build_problem(n: usize, per_block: usize, blocks: usize, seed: u64) -> Result<Problem> {
    let x = Signal::random_unit(n, sub_seed(seed, purpose::SIGNAL))?;
    let total = per_block
        .checked_mul(blocks)
        .ok_or_else(|| Error::Parameter("ensemble size overflows".into()))?;
    let ensemble = generate_gaussian_ensemble(n, total, sub_seed(seed, purpose::ENSEMBLE))?.observe(&x)?;
    let z0 = random_init(n, 1.0, sub_seed(seed, purpose::START))?;
    Ok(Problem {
        x,
        ensemble,
        z0,
        per_block,
    })
}

/// Result of one solver run; a divergence is recorded instead of aborting the
/// experiment.
#[derive(Debug, Clone)]
pub(crate) struct TrialRun {
    pub trace: IterateTrace,
    pub converged: bool,
    pub iterations: usize,
    pub diverged: bool,
    pub seconds: f64,
}

pub(crate) fn run_trial<M: Measurements<f64> + ?Sized>(
    config: &SolverConfig,
    ens: &M,
    z0: &Signal,
    x: &Signal,
) -> Result<TrialRun> {
    let start = Instant::now();
    match solver::solve(config, ens, z0, x) {
        Ok(r) => Ok(TrialRun {
            trace: r.trace,
            converged: r.converged,
            iterations: r.iterations,
            diverged: false,
            seconds: r.wall_time.as_secs_f64(),
        }),
        Err(Error::Divergence { iteration, trace }) => Ok(TrialRun {
            trace: *trace,
            converged: false,
            iterations: iteration,
            diverged: true,
            seconds: start.elapsed().as_secs_f64(),
        }),
        Err(e) => Err(e),
    }
}

/// Worker count: explicit setting, then [`WORKERS_ENV`], then the number of
/// available cores.
pub fn worker_count(explicit: Option<usize>) -> Result<usize> {
    if let Some(w) = explicit {
        return if w == 0 { param("worker count must be >= 1") } else { Ok(w) };
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(w) if w >= 1 => Ok(w),
            _ => param(format!("{WORKERS_ENV} must be a positive integer, got {v:?}")),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Map `f` over `items` on a pool of `workers` threads, keeping input order.
pub(crate) fn run_pool<I, O, F>(workers: usize, items: Vec<I>, f: F) -> Result<Vec<O>>
where
    I: Send,
    O: Send,
    F: Fn(I) -> Result<O> + Sync + Send,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::State(format!("worker pool: {e}")))?;
    pool.install(|| items.into_par_iter().map(f).collect())
}

/// `(n, trial)` pairs, largest `n` first.
pub(crate) fn schedule(dims: &[usize], trials: usize) -> Vec<(usize, usize)> {
    let mut d = dims.to_vec();
    d.sort_unstable_by(|a, b| b.cmp(a));
    d.dedup();
    d.into_iter()
        .flat_map(|n| (0..trials).map(move |t| (n, t)))
        .collect()
}

pub(crate) fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

pub(crate) fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn read_csv<R: DeserializeOwned>(path: &Path) -> Result<Vec<R>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<R>, _>>()?;
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedRecord {
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
}

#[derive(Serialize)]
struct Manifest<'a, S: Serialize> {
    experiment: &'a str,
    version: &'a str,
    spec: &'a ExperimentSpec,
    workers: usize,
    files: &'a [String],
    seeds: &'a [SeedRecord],
    wall_time_seconds: f64,
    summary: &'a S,
}

pub(crate) fn write_manifest<S: Serialize>(
    spec: &ExperimentSpec,
    workers: usize,
    files: &[String],
    seeds: &[SeedRecord],
    started: Instant,
    summary: &S,
) -> Result<()> {
    let m = Manifest {
        experiment: spec.kind.name(),
        version: env!("CARGO_PKG_VERSION"),
        spec,
        workers,
        files,
        seeds,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        summary,
    };
    let f = fs::File::create(spec.output_dir.join("manifest.json"))?;
    serde_json::to_writer_pretty(f, &m)?;
    Ok(())
}

/// Outcome summary used by the command-line front end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub kind: ExperimentKind,
    pub files: Vec<PathBuf>,
    /// Trials that hit the divergence guard.
    pub diverged: usize,
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunSummary> {
    let (files, diverged) = match spec.kind {
        ExperimentKind::TgammaSweep => cmd_tgamma_sweep(spec).map(|o| (o.files, o.diverged))?,
        ExperimentKind::Race => cmd_race(spec).map(|o| (o.files, o.diverged))?,
        ExperimentKind::OmegaTrace => cmd_omega_trace(spec).map(|o| (o.files, o.diverged))?,
        ExperimentKind::Timing => cmd_timing(spec).map(|o| (o.files, o.diverged))?,
        ExperimentKind::Substages => cmd_substages(spec).map(|o| (o.files, o.diverged))?,
        ExperimentKind::StateEvolution => cmd_state_evolution(spec).map(|o| (o.files, o.diverged))?,
        ExperimentKind::Lemma3Check => cmd_lemma3_check(spec).map(|o| (o.files, 0))?,
    };
    Ok(RunSummary {
        kind: spec.kind,
        files,
        diverged,
    })
}

/// Redraw `<stem>.svg` in `dir` from the CSV files already there.
pub fn regenerate_plot(kind: ExperimentKind, dir: &Path) -> Result<PathBuf> {
    match kind {
        ExperimentKind::TgammaSweep => tgamma::plot(dir),
        ExperimentKind::Race => race::plot(dir),
        ExperimentKind::OmegaTrace => omega::plot(dir),
        ExperimentKind::Timing => timing::plot(dir),
        ExperimentKind::Substages => substages::plot(dir),
        ExperimentKind::StateEvolution => state_evolution::plot(dir),
        ExperimentKind::Lemma3Check => lemma3::plot(dir),
    }
}

pub(crate) fn file_names(paths: &[PathBuf]) -> Vec<String> {
    paths
        .iter()
        .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
        .collect()
}

/// `Option<usize>` as an `f64` with `None` mapped to `+∞` (a censored time).
pub(crate) fn censored(v: Option<usize>) -> f64 {
    v.map_or(f64::INFINITY, |k| k as f64)
}
