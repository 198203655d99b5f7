//! Deterministic two-variable recursion for the signal coefficient `alpha`
//! and orthogonal norm `beta`:
//!
//! ```text
//! alpha' = [1 − μ(1 − (2/π)·β/(α²+β²) + ζ)]·α + (2μ/π)·arcsin(α/√(α²+β²))
//! beta'  = [1 − μ(1 − (2/π)·β/(α²+β²) + ρ)]·β
//! ```
//!
//! `ζ`, `ρ` are bounded perturbations; zero gives the clean recursion.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{param, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateEvolutionState {
    pub alpha: f64,
    pub beta: f64,
    pub zeta: f64,
    pub rho: f64,
}

impl StateEvolutionState {
    pub fn clean(alpha: f64, beta: f64) -> Self {
        Self {
            alpha,
            beta,
            zeta: 0.0,
            rho: 0.0,
        }
    }

    pub fn tan_omega(&self) -> f64 {
        self.alpha.abs() / self.beta
    }
}

/// One step of the recursion. The returned state carries zero perturbations.
pub fn state_evolution_step(s: StateEvolutionState, mu: f64) -> Result<StateEvolutionState> {
    if !(s.beta >= 0.0) {
        return param("beta must be nonnegative");
    }
    let r2 = s.alpha * s.alpha + s.beta * s.beta;
    if r2 == 0.0 {
        return param("state evolution undefined at alpha = beta = 0");
    }
    let shrink = 1.0 - (2.0 / PI) * s.beta / r2;
    let alpha = (1.0 - mu * (shrink + s.zeta)) * s.alpha
        + (2.0 * mu / PI) * (s.alpha / r2.sqrt()).clamp(-1.0, 1.0).asin();
    let beta = (1.0 - mu * (shrink + s.rho)) * s.beta;
    Ok(StateEvolutionState::clean(alpha, beta))
}

/// How `ζ_k`, `ρ_k` are chosen at each step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Perturbation {
    Clean,
    /// Independent uniform draws from `[−bound, bound]`.
    Uniform { bound: f64, seed: u64 },
}

impl Perturbation {
    /// Ceiling `c / log m̃` for a per-block sample count `m̃`.
    pub fn log_ceiling(c: f64, block_size: usize, seed: u64) -> Self {
        Perturbation::Uniform {
            bound: c / (block_size as f64).ln(),
            seed,
        }
    }
}

/// Run `steps` steps from `(alpha0, beta0)`; returns `steps + 1` states.
pub fn run_state_evolution(
    alpha0: f64,
    beta0: f64,
    mu: f64,
    steps: usize,
    perturbation: Perturbation,
) -> Result<Vec<StateEvolutionState>> {
    let mut rng = match perturbation {
        Perturbation::Uniform { seed, .. } => Some(rng::stream(seed, 0)),
        Perturbation::Clean => None,
    };
    let mut out = Vec::with_capacity(steps + 1);
    let mut s = StateEvolutionState::clean(alpha0, beta0);
    for _ in 0..steps {
        if let (Perturbation::Uniform { bound, .. }, Some(rng)) = (perturbation, rng.as_mut()) {
            if bound > 0.0 {
                s.zeta = rng.gen_range(-bound..=bound);
                s.rho = rng.gen_range(-bound..=bound);
            }
        }
        out.push(s);
        s = state_evolution_step(s, mu)?;
    }
    out.push(s);
    Ok(out)
}

/// Steps of the clean recursion until `|1 − |α|| ≤ γ/2` and `β ≤ γ/2`.
pub fn steps_to_gamma(alpha0: f64, beta0: f64, mu: f64, gamma: f64, max_steps: usize) -> Result<Option<usize>> {
    let mut s = StateEvolutionState::clean(alpha0, beta0);
    for k in 0..=max_steps {
        if (1.0 - s.alpha.abs()).abs() <= 0.5 * gamma && s.beta <= 0.5 * gamma {
            return Ok(Some(k));
        }
        s = state_evolution_step(s, mu)?;
    }
    Ok(None)
}

/// Starting point `(1/(2√(n log n)), 1)` used for the dimension sweep.
pub fn random_start(n: usize) -> (f64, f64) {
    let nf = n as f64;
    (1.0 / (2.0 * (nf * nf.ln()).sqrt()), 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn truth_is_fixed_point() {
        for mu in [0.1, 0.5, 0.9] {
            let s = state_evolution_step(StateEvolutionState::clean(1.0, 0.0), mu).unwrap();
            assert!((s.alpha - 1.0).abs() <= 1e-15);
            assert_eq!(s.beta, 0.0);
        }
    }

    #[test]
    fn diagonal_state_step() {
        // direct evaluation, recomputed independently in double precision
        let s = StateEvolutionState::clean(FRAC_1_SQRT_2, FRAC_1_SQRT_2);
        let t = state_evolution_step(s, 0.5).unwrap();
        assert!((t.alpha - 0.762_708_333_685_169_2).abs() < 1e-12);
        assert!((t.beta - 0.512_708_333_685_169_1).abs() < 1e-12);
    }

    #[test]
    fn origin_rejected() {
        assert!(state_evolution_step(StateEvolutionState::clean(0.0, 0.0), 0.5).is_err());
        assert!(state_evolution_step(StateEvolutionState::clean(0.1, -1.0), 0.5).is_err());
    }

    #[test]
    fn tan_omega_growth_on_grid() {
        // in the beta ≤ 3/4 band with beta bounded below and alpha < beta
        for mu in [0.1, 0.25, 0.5] {
            for i in 1..=40 {
                for j in 1..=40 {
                    let beta = 0.05 + 0.7 * j as f64 / 40.0;
                    let alpha = beta * i as f64 / 41.0;
                    let s = StateEvolutionState::clean(alpha, beta);
                    let t = state_evolution_step(s, mu).unwrap();
                    assert!(
                        t.tan_omega() / s.tan_omega() >= 1.0 + mu / 4.0 - 1e-12,
                        "mu={mu} alpha={alpha} beta={beta}"
                    );
                }
            }
        }
    }

    #[test]
    fn beta_contracts_above_threshold() {
        for rho in [-0.02, 0.0, 0.02] {
            let thresh = 2.0 / (PI * (1.0 - f64::abs(rho)));
            for j in 1..50 {
                let beta = thresh + 0.05 * j as f64;
                for alpha in [0.0, 0.1, 0.5, 1.0] {
                    let s = StateEvolutionState { alpha, beta, zeta: 0.0, rho };
                    let t = state_evolution_step(s, 0.5).unwrap();
                    assert!(t.beta < beta);
                }
            }
        }
    }

    #[test]
    fn clean_run_reaches_gamma_ball() {
        let (a, b) = random_start(1000);
        let k = steps_to_gamma(a, b, 0.5, 0.1, 1000).unwrap().unwrap();
        assert!(k > 5 && k < 200, "k={k}");
        let traj = run_state_evolution(a, b, 0.5, k, Perturbation::Clean).unwrap();
        assert_eq!(traj.len(), k + 1);
        let last = traj[k];
        assert!((1.0 - last.alpha).abs() <= 0.05 && last.beta <= 0.05);
    }

    #[test]
    fn perturbed_run_is_seeded() {
        let p = Perturbation::log_ceiling(0.1, 10_000, 5);
        let a = run_state_evolution(0.02, 1.0, 0.5, 30, p).unwrap();
        let b = run_state_evolution(0.02, 1.0, 0.5, 30, p).unwrap();
        assert_eq!(a, b);
        let bound = 0.1 / 10_000f64.ln();
        assert!(a.iter().all(|s| s.zeta.abs() <= bound && s.rho.abs() <= bound));
    }
}
