//! Stopping times of the first (angle-growth) phase.
//!
//! Landmarks are computed on `|alpha|`, so a run converging to `−x` is judged
//! the same way as one converging to `x`. Definitions that look one step ahead
//! (`min{k : cond(k+1)}`) report `0` when the condition already holds at the
//! first recorded row.

use std::f64::consts::FRAC_PI_2;

use super::trace::{IterateTrace, TraceRow};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct SubstageLandmarks {
    /// First `k` with `|1 − α_k| ≤ γ/2` and `β_k ≤ γ/2`.
    pub t_gamma: Option<usize>,
    /// First `k` with `β_{k+1} ≤ γ/2`.
    pub t_gamma2: Option<usize>,
    /// First `k` with `ω_{k+1} ≥ π/2 − γ/4`.
    pub t_omega: Option<usize>,
    /// First `t` with `β_{t+1} ≤ 3/4`.
    pub t_11: Option<usize>,
    /// First `t` with `|α_{t+1}| ≥ δ`.
    pub t_1: Option<usize>,
}

impl SubstageLandmarks {
    /// `T_11 ≤ T_1 ≤ T_γ2 ≤ T_γ` when all four are defined.
    pub fn ordered(&self) -> bool {
        match (self.t_11, self.t_1, self.t_gamma2, self.t_gamma) {
            (Some(a), Some(b), Some(c), Some(d)) => a <= b && b <= c && c <= d,
            _ => false,
        }
    }
}

fn first(trace: &IterateTrace, cond: impl Fn(&TraceRow) -> bool) -> Option<usize> {
    trace.rows().iter().find(|r| cond(r)).map(|r| r.k)
}

fn first_ahead(trace: &IterateTrace, cond: impl Fn(&TraceRow) -> bool) -> Option<usize> {
    first(trace, cond).map(|k| k.saturating_sub(1))
}

pub fn detect_landmarks(trace: &IterateTrace, gamma: f64, delta: f64) -> SubstageLandmarks {
    let half = 0.5 * gamma;
    SubstageLandmarks {
        t_gamma: first(trace, |r| (1.0 - r.alpha.abs()).abs() <= half && r.beta <= half),
        t_gamma2: first_ahead(trace, |r| r.beta <= half),
        t_omega: first_ahead(trace, |r| r.omega >= FRAC_PI_2 - 0.25 * gamma),
        t_11: first_ahead(trace, |r| r.beta <= 0.75),
        t_1: first_ahead(trace, |r| r.alpha.abs() >= delta),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(k: usize, alpha: f64, beta: f64) -> TraceRow {
        TraceRow {
            k,
            alpha,
            beta,
            r: alpha.hypot(beta),
            omega: alpha.abs().atan2(beta),
            dist_rel: 0.0,
            loss: 0.0,
        }
    }

    #[test]
    fn start_at_truth_gives_all_zero() {
        let t = IterateTrace::from_rows(vec![row(0, 1.0, 0.0)]);
        let l = detect_landmarks(&t, 0.1, 0.2);
        assert_eq!(
            l,
            SubstageLandmarks {
                t_gamma: Some(0),
                t_gamma2: Some(0),
                t_omega: Some(0),
                t_11: Some(0),
                t_1: Some(0)
            }
        );
        assert!(l.ordered());
    }

    #[test]
    fn constant_beta_never_crosses() {
        let t = IterateTrace::from_rows((0..50).map(|k| row(k, 0.01 * k as f64, 1.0)).collect());
        let l = detect_landmarks(&t, 0.1, 0.2);
        assert_eq!(l.t_11, None);
        assert_eq!(l.t_gamma, None);
        assert_eq!(l.t_1, Some(19));
    }

    #[test]
    fn look_ahead_shift() {
        let t = IterateTrace::from_rows(vec![row(0, 0.05, 1.0), row(1, 0.1, 0.9), row(2, 0.3, 0.7)]);
        let l = detect_landmarks(&t, 0.1, 0.2);
        assert_eq!(l.t_11, Some(1));
        assert_eq!(l.t_1, Some(1));
    }

    #[test]
    fn mirrored_trace_same_landmarks() {
        let rows: Vec<_> = (0..30)
            .map(|k| row(k, 0.03 * 1.2f64.powi(k as i32).min(33.0), 1.0 / (1.0 + k as f64)))
            .collect();
        let neg: Vec<_> = rows.iter().map(|r| TraceRow { alpha: -r.alpha, ..*r }).collect();
        let a = detect_landmarks(&IterateTrace::from_rows(rows), 0.1, 0.2);
        let b = detect_landmarks(&IterateTrace::from_rows(neg), 0.1, 0.2);
        assert_eq!(a, b);
    }
}
