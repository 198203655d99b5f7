use std::sync::Mutex;

use phaseflow::ensemble::{generate_gaussian_ensemble, partition_blocks, Measurements};
use phaseflow::init::random_init;
use phaseflow::solver::{run, SolverConfig};
use phaseflow::Signal;

/// Records which rows the solver reads.
struct Counting<'a> {
    inner: &'a phaseflow::Measurements,
    touched: Mutex<Vec<usize>>,
}

impl Measurements<f64> for Counting<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn len(&self) -> usize {
        self.inner.len()
    }

    fn is_observed(&self) -> bool {
        self.inner.is_observed()
    }

    fn sample(&self, i: usize) -> (&[f64], f64) {
        self.touched.lock().unwrap().push(i);
        self.inner.sample(i)
    }
}

#[test]
fn iteration_k_reads_only_block_k_mod_blocks() {
    let (n, per_block, blocks) = (12, 60, 4);
    let x = Signal::random_unit(n, 1).unwrap();
    let e = generate_gaussian_ensemble(n, per_block * blocks, 2).unwrap().observe(&x).unwrap();
    let schedule = partition_blocks(e.len(), blocks).unwrap();
    let mut z = random_init(n, 1.0, 3).unwrap();
    for k in 0..3 * blocks {
        let c = Counting { inner: &e, touched: Mutex::new(Vec::new()) };
        let block = schedule.block_for_iteration(k);
        assert_eq!(block, (k % blocks) * per_block..(k % blocks + 1) * per_block);
        let step = phaseflow::solver::rwf_step(&z, &c, block.clone(), 0.5).unwrap();
        let touched = c.touched.into_inner().unwrap();
        assert_eq!(touched.len(), per_block);
        assert!(touched.iter().all(|i| block.contains(i)), "k = {k}");
        z = step;
    }
}

#[test]
fn solver_run_cycles_blocks_in_order() {
    let (n, per_block, blocks) = (10, 50, 3);
    let x = Signal::random_unit(n, 7).unwrap();
    let e = generate_gaussian_ensemble(n, per_block * blocks, 8).unwrap().observe(&x).unwrap();
    let schedule = partition_blocks(e.len(), blocks).unwrap();
    let z0 = random_init(n, 1.0, 9).unwrap();
    let iters = 7;
    let c = Counting { inner: &e, touched: Mutex::new(Vec::new()) };
    let cfg = SolverConfig { blocks, max_iters: iters, tol: 1e-12, ..SolverConfig::default() };
    let r = run(&cfg, &c, &schedule, &z0, &x).unwrap();
    assert_eq!(r.iterations, iters);
    let touched = c.touched.into_inner().unwrap();
    // one gradient pass per recorded row, rows 0..=iters
    assert_eq!(touched.len(), (iters + 1) * per_block);
    for (k, chunk) in touched.chunks(per_block).enumerate() {
        let b = k % blocks;
        assert!(
            chunk.iter().all(|&i| i / per_block == b),
            "pass {k} strayed outside block {b}"
        );
    }
}

#[test]
fn full_batch_reads_every_row_each_pass() {
    let (n, m) = (8, 90);
    let x = Signal::random_unit(n, 1).unwrap();
    let e = generate_gaussian_ensemble(n, m, 2).unwrap().observe(&x).unwrap();
    let schedule = partition_blocks(m, 1).unwrap();
    let z0 = random_init(n, 1.0, 3).unwrap();
    let c = Counting { inner: &e, touched: Mutex::new(Vec::new()) };
    let cfg = SolverConfig { max_iters: 2, tol: 1e-12, ..SolverConfig::default() };
    run(&cfg, &c, &schedule, &z0, &x).unwrap();
    let touched = c.touched.into_inner().unwrap();
    assert_eq!(touched.len(), 3 * m);
    for chunk in touched.chunks(m) {
        let mut s = chunk.to_vec();
        s.sort_unstable();
        assert_eq!(s, (0..m).collect::<Vec<_>>());
    }
}
