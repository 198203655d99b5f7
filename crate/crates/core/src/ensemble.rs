//! Gaussian sensing ensembles, magnitude observations and block partitions.

use std::ops::Range;

use crate::error::{param, Error, Result};
use crate::linalg;
use crate::rng;
use crate::Scalar;

/// Dense real signal of dimension `n ≥ 2` with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalVector<T> {
    entries: Vec<T>,
}

impl<T: Scalar> SignalVector<T> {
    pub fn new(entries: Vec<T>) -> Result<Self> {
        if entries.len() < 2 {
            return param(format!("signal dimension must be >= 2, got {}", entries.len()));
        }
        if !linalg::all_finite(&entries) {
            return param("signal entries must be finite");
        }
        Ok(Self { entries })
    }

    pub fn from_f64(entries: &[f64]) -> Result<Self> {
        Self::new(entries.iter().map(|&v| T::lit(v)).collect())
    }

    /// Uniformly random unit vector (normalized Gaussian draw).
    pub fn random_unit(n: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return param(format!("signal dimension must be >= 2, got {n}"));
        }
        let mut v: Vec<T> = rng::gaussian_vec(n, 1.0, seed);
        let nrm = linalg::norm(&v);
        linalg::scale(T::one() / nrm, &mut v);
        Self::new(v)
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.entries
    }

    pub fn into_vec(self) -> Vec<T> {
        self.entries
    }

    pub fn norm(&self) -> T {
        linalg::norm(&self.entries)
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            entries: self.entries.iter().map(|&v| c * v).collect(),
        }
    }

    pub fn negated(&self) -> Self {
        self.scaled(-T::one())
    }
}

/// Read access to (sensing vector, observation) pairs.
///
/// The objective and solver only touch samples through this trait, which lets
/// tests wrap a [`MeasurementSet`] and count accesses per index.
pub trait Measurements<T: Scalar>: Sync {
    /// Signal dimension `n`.
    fn dim(&self) -> usize;
    /// Number of samples `m`.
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn is_observed(&self) -> bool;
    /// Row `a_i` and observation `y_i`. Callers check [`Self::is_observed`] first.
    fn sample(&self, i: usize) -> (&[T], T);
}

/// `m` sensing vectors stored row-major in one dense buffer, plus the
/// magnitude observations once [`MeasurementSet::observe`] has run.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet<T> {
    n: usize,
    m: usize,
    vectors: Vec<T>,
    observations: Option<Vec<T>>,
    seed: u64,
}

/// Draw `m` i.i.d. standard Gaussian sensing vectors in dimension `n`.
pub fn generate_gaussian_ensemble<T: Scalar>(
    n: usize,
    m: usize,
    seed: u64,
) -> Result<MeasurementSet<T>> {
    if n < 2 {
        return param(format!("ensemble dimension must be >= 2, got {n}"));
    }
    if m < 1 {
        return param("ensemble needs at least one sample");
    }
    let len = n
        .checked_mul(m)
        .ok_or_else(|| Error::Parameter("ensemble size overflows".into()))?;
    Ok(MeasurementSet {
        n,
        m,
        vectors: rng::gaussian_vec(len, 1.0, seed),
        observations: None,
        seed,
    })
}

impl<T: Scalar> MeasurementSet<T> {
    /// Build from explicit rows (row-major, `rows.len() == m * n`).
    pub fn from_rows(n: usize, rows: Vec<T>) -> Result<Self> {
        if n < 1 || rows.is_empty() || rows.len() % n != 0 {
            return param("rows must be a nonempty multiple of the dimension");
        }
        Ok(Self {
            n,
            m: rows.len() / n,
            vectors: rows,
            observations: None,
            seed: 0,
        })
    }

    /// Record `y_i = |⟨a_i, x⟩|` for every row.
    pub fn observe(mut self, x: &SignalVector<T>) -> Result<Self> {
        if x.dim() != self.n {
            return param(format!(
                "signal dimension {} does not match ensemble dimension {}",
                x.dim(),
                self.n
            ));
        }
        let xs = x.as_slice();
        let y = self
            .vectors
            .chunks_exact(self.n)
            .map(|row| linalg::dot(row, xs).abs())
            .collect();
        self.observations = Some(y);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn vectors(&self) -> &[T] {
        &self.vectors
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.vectors[i * self.n..(i + 1) * self.n]
    }

    pub fn observations(&self) -> Option<&[T]> {
        self.observations.as_deref()
    }
}

impl<T: Scalar> Measurements<T> for MeasurementSet<T> {
    fn dim(&self) -> usize {
        self.n
    }

    fn len(&self) -> usize {
        self.m
    }

    fn is_observed(&self) -> bool {
        self.observations.is_some()
    }

    #[inline]
    fn sample(&self, i: usize) -> (&[T], T) {
        let y = self.observations.as_ref().map_or(T::zero(), |o| o[i]);
        (self.row(i), y)
    }
}

/// Contiguous rows `rows` of a [`MeasurementSet`], re-indexed from 0.
#[derive(Debug, Clone, Copy)]
pub struct RowView<'a, T> {
    inner: &'a MeasurementSet<T>,
    start: usize,
    len: usize,
}

impl<T: Scalar> MeasurementSet<T> {
    pub fn view(&self, rows: Range<usize>) -> Result<RowView<'_, T>> {
        if rows.is_empty() || rows.end > self.m {
            return param(format!("row range {rows:?} invalid for {} samples", self.m));
        }
        Ok(RowView {
            inner: self,
            start: rows.start,
            len: rows.len(),
        })
    }
}

impl<T: Scalar> Measurements<T> for RowView<'_, T> {
    fn dim(&self) -> usize {
        self.inner.n
    }

    fn len(&self) -> usize {
        self.len
    }

    fn is_observed(&self) -> bool {
        self.inner.is_observed()
    }

    #[inline]
    fn sample(&self, i: usize) -> (&[T], T) {
        debug_assert!(i < self.len);
        self.inner.sample(self.start + i)
    }
}

/// `K` contiguous disjoint blocks covering `0..m`; the last block absorbs the
/// `m mod K` remainder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSchedule {
    blocks: Vec<Range<usize>>,
    block_size: usize,
}

pub fn partition_blocks(m: usize, k: usize) -> Result<BlockSchedule> {
    if k == 0 || k > m {
        return param(format!("block count must satisfy 1 <= K <= m, got K={k}, m={m}"));
    }
    let block_size = m / k;
    let blocks = (0..k)
        .map(|b| {
            let end = if b + 1 == k { m } else { (b + 1) * block_size };
            b * block_size..end
        })
        .collect();
    Ok(BlockSchedule { blocks, block_size })
}

impl BlockSchedule {
    pub fn count(&self) -> usize {
        self.blocks.len()
    }

    /// Nominal block size `floor(m / K)`.
    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    /// Total number of samples covered.
    pub fn total(&self) -> usize {
        self.blocks.last().map_or(0, |b| b.end)
    }

    /// Block used by iteration `k`: index `k mod K`.
    pub fn block_for_iteration(&self, k: usize) -> Range<usize> {
        self.blocks[k % self.blocks.len()].clone()
    }
}
