use phaseflow::ensemble::{generate_gaussian_ensemble, SignalVector};
use phaseflow::objective::{rwf_gradient, rwf_loss, wf_gradient, wf_loss};
use phaseflow::{linalg, rng, Signal};
use proptest::prelude::*;

const H: f64 = 1e-6;

fn central_difference(f: impl Fn(&Signal) -> f64, z: &Signal) -> Vec<f64> {
    (0..z.dim())
        .map(|j| {
            let mut p = z.as_slice().to_vec();
            let mut q = p.clone();
            p[j] += H;
            q[j] -= H;
            (f(&Signal::new(p).unwrap()) - f(&Signal::new(q).unwrap())) / (2.0 * H)
        })
        .collect()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    linalg::norm(&d) / linalg::norm(b).max(1e-12)
}

/// Redraws `z` until every `|⟨a_i, z⟩|` clears the finite-difference stencil.
fn away_from_crossings(ens: &phaseflow::Measurements, n: usize, seed: u64) -> Signal {
    for attempt in 0.. {
        let z: Signal = SignalVector::new(rng::gaussian_vec(n, 1.0, rng::derive_seed(seed, &[attempt]))).unwrap();
        let clear = (0..ens.len()).all(|i| {
            let a = ens.row(i);
            linalg::dot(a, z.as_slice()).abs() > 10.0 * H * linalg::norm(a)
        });
        if clear {
            return z;
        }
    }
    unreachable!()
}

fn instance(n: usize, m: usize, seed: u64) -> (phaseflow::Measurements, Signal) {
    let x = Signal::random_unit(n, seed).unwrap();
    let e = generate_gaussian_ensemble(n, m, seed + 1).unwrap().observe(&x).unwrap();
    let z = away_from_crossings(&e, n, seed + 2);
    (e, z)
}

#[test]
fn rwf_gradient_matches_finite_differences() {
    for seed in 0..100u64 {
        let n = 2 + (seed as usize % 19);
        let m = 10 + (seed as usize * 7) % 191;
        let (e, z) = instance(n, m, seed * 10);
        let g = rwf_gradient(&e, 0..m, &z).unwrap();
        let fd = central_difference(|w| rwf_loss(&e, 0..m, w).unwrap(), &z);
        let err = rel_err(&g.gradient, &fd);
        assert!(err <= 1e-5, "seed {seed}: n {n} m {m} rel err {err:e}");
    }
}

#[test]
fn wf_gradient_matches_finite_differences() {
    for seed in 0..100u64 {
        let n = 2 + (seed as usize % 19);
        let m = 10 + (seed as usize * 7) % 191;
        let (e, z) = instance(n, m, seed * 10 + 5);
        let g = wf_gradient(&e, 0..m, &z).unwrap();
        let fd = central_difference(|w| wf_loss(&e, 0..m, w).unwrap(), &z);
        let err = rel_err(&g.gradient, &fd);
        assert!(err <= 1e-6, "seed {seed}: n {n} m {m} rel err {err:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradients_are_odd_in_z(n in 2usize..12, m in 5usize..60, seed in 0u64..1000) {
        let (e, z) = instance(n, m, seed);
        for (g, h) in [
            (rwf_gradient(&e, 0..m, &z).unwrap(), rwf_gradient(&e, 0..m, &z.negated()).unwrap()),
            (wf_gradient(&e, 0..m, &z).unwrap(), wf_gradient(&e, 0..m, &z.negated()).unwrap()),
        ] {
            prop_assert!((g.loss - h.loss).abs() <= 1e-12 * g.loss.abs().max(1.0));
            for (a, b) in g.gradient.iter().zip(&h.gradient) {
                prop_assert!((a + b).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn truth_is_stationary(n in 2usize..12, m in 5usize..60, seed in 0u64..1000) {
        let x = Signal::random_unit(n, seed).unwrap();
        let e = generate_gaussian_ensemble(n, m, seed + 1).unwrap().observe(&x).unwrap();
        for z in [x.clone(), x.negated()] {
            let g = rwf_gradient(&e, 0..m, &z).unwrap();
            prop_assert!(g.loss < 1e-24);
            prop_assert!(linalg::norm(&g.gradient) < 1e-12);
            let g = wf_gradient(&e, 0..m, &z).unwrap();
            prop_assert!(linalg::norm(&g.gradient) < 1e-12);
        }
    }
}
