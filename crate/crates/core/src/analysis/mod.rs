//! Iterate diagnostics: geometry against the ground truth, landmark times,
//! the state-evolution recursion and the population update direction.

mod geometry;
mod landmarks;
mod state_evolution;
mod trace;

pub use geometry::{
    decompose, decompose_slice, dist, dist_slice, expected_update, mc_expectation_oracle,
    Decomposition, ExpectedUpdate, MonteCarloEstimate,
};
pub use landmarks::{detect_landmarks, SubstageLandmarks};
pub use state_evolution::{
    random_start, run_state_evolution, state_evolution_step, steps_to_gamma, Perturbation,
    StateEvolutionState,
};
pub use trace::{IterateTrace, TraceRow, TRACE_HEADER};

/// Default `δ` threshold for the `T_1` landmark.
pub const DEFAULT_DELTA: f64 = 0.2;

/// Fraction of consecutive pairs with `next >= prev`.
pub fn fraction_non_decreasing(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 1.0;
    }
    let ok = values.windows(2).filter(|w| w[1] >= w[0]).count();
    ok as f64 / (values.len() - 1) as f64
}

/// Fraction of consecutive pairs with `next > prev`.
pub fn fraction_increasing(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 1.0;
    }
    let ok = values.windows(2).filter(|w| w[1] > w[0]).count();
    ok as f64 / (values.len() - 1) as f64
}
