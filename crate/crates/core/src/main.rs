use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use phaseflow::harness::{self, ExperimentKind, ExperimentSpec};
use phaseflow::Error;

/// Phase retrieval experiments with reshaped Wirtinger flow.
#[derive(Parser, Debug)]
#[command(name = "phaseflow", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Median T_gamma against n for gamma = 0.5 and --gamma.
    #[command(name = "tgamma-sweep", alias = "tgamma")]
    TgammaSweep(RunArgs),
    /// RWF against WF from shared random starts.
    Race(RunArgs),
    /// omega_k during the first phase.
    #[command(name = "omega-trace", alias = "omega")]
    OmegaTrace(RunArgs),
    /// Spectral start against random-start RWF, wall time.
    Timing(RunArgs),
    /// alpha_t, beta_t and the first-phase landmarks.
    Substages(RunArgs),
    /// Clean state-evolution recursion and a tracking run.
    #[command(name = "state-evolution")]
    StateEvolution(RunArgs),
    /// Closed-form expected update against Monte Carlo.
    #[command(name = "lemma3-check", alias = "lemma3")]
    Lemma3Check(RunArgs),
    /// Redraw an experiment's SVG from the CSV files in --out.
    Plot {
        /// Experiment name, e.g. race or tgamma-sweep.
        experiment: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Signal dimensions (space or comma separated).
    #[arg(long = "n", num_args = 1.., value_delimiter = ',')]
    n: Vec<usize>,
    /// Samples per block divided by n.
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// RWF step size.
    #[arg(long)]
    mu: Option<f64>,
    /// WF step size.
    #[arg(long = "mu-wf")]
    mu_wf: Option<f64>,
    /// Block count.
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long = "max-iters")]
    max_iters: Option<usize>,
    #[arg(long = "wf-max-iters")]
    wf_max_iters: Option<usize>,
    /// Target relative distance.
    #[arg(long)]
    tol: Option<f64>,
    /// Timing repetitions.
    #[arg(long)]
    reps: Option<usize>,
    /// Monte-Carlo samples per cell.
    #[arg(long)]
    samples: Option<usize>,
    /// Stop each WF run once it has used as many iterations as RWF.
    #[arg(long = "truncate-wf")]
    truncate_wf: bool,
}

impl RunArgs {
    fn into_spec(self, kind: ExperimentKind) -> ExperimentSpec {
        let mut s = ExperimentSpec::new(kind, self.out);
        if !self.n.is_empty() {
            s.dims = self.n;
        }
        macro_rules! set {
            ($($field:ident <- $arg:expr),* $(,)?) => {
                $(if let Some(v) = $arg { s.$field = v; })*
            };
        }
        set!(
            oversampling <- self.ratio,
            trials <- self.trials,
            gamma <- self.gamma,
            delta <- self.delta,
            mu_rwf <- self.mu,
            mu_wf <- self.mu_wf,
            blocks <- self.k,
            master_seed <- self.seed,
            max_iters <- self.max_iters,
            wf_max_iters <- self.wf_max_iters,
            tol <- self.tol,
            reps <- self.reps,
            samples <- self.samples,
        );
        s.truncate_wf = self.truncate_wf;
        s
    }
}

const EXIT_FAILURE: u8 = 1;
const EXIT_PARAMETER: u8 = 2;
const EXIT_DIVERGENCE: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parameter(_) => EXIT_PARAMETER,
        Error::Divergence { .. } => EXIT_DIVERGENCE,
        _ => EXIT_FAILURE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::TgammaSweep(a) => (ExperimentKind::TgammaSweep, a),
        Command::Race(a) => (ExperimentKind::Race, a),
        Command::OmegaTrace(a) => (ExperimentKind::OmegaTrace, a),
        Command::Timing(a) => (ExperimentKind::Timing, a),
        Command::Substages(a) => (ExperimentKind::Substages, a),
        Command::StateEvolution(a) => (ExperimentKind::StateEvolution, a),
        Command::Lemma3Check(a) => (ExperimentKind::Lemma3Check, a),
        Command::Plot { experiment, out } => {
            let Some(kind) = ExperimentKind::parse(&experiment) else {
                eprintln!("error: unknown experiment {experiment:?}");
                return ExitCode::from(EXIT_PARAMETER);
            };
            return match harness::regenerate_plot(kind, &out) {
                Ok(p) => {
                    println!("{}", p.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(exit_code(&e))
                }
            };
        }
    };
    let spec = args.into_spec(kind);
    eprintln!("phaseflow {}: dims {:?}, writing to {}", kind.name(), spec.dims, spec.output_dir.display());
    match harness::run_experiment(&spec) {
        Ok(summary) => {
            for f in &summary.files {
                println!("{}", f.display());
            }
            if summary.diverged > 0 {
                eprintln!("error: {} trial(s) diverged; flagged in the CSV rows", summary.diverged);
                ExitCode::from(EXIT_DIVERGENCE)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
