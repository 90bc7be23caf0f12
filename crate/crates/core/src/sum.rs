//! Compensated accumulators and the deterministic block reduction used for
//! every sum over the spectral grid.
//!
//! Grid sums are cut into fixed blocks of [`BLOCK_LEN`] indices. Each block is
//! accumulated on its own and the block partials are merged in index order,
//! so the result depends only on the grid, never on how many workers computed
//! the blocks.

use crate::{Error, Result};

/// Number of grid indices per reduction block.
pub const BLOCK_LEN: usize = 4096;

pub trait Accumulator: Default + Copy + Send + Sync {
    fn add(&mut self, x: f64);
    fn merge(&mut self, other: &Self);
    fn value(&self) -> f64;
}

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Accumulator for NeumaierSum {
    #[inline]
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn merge(&mut self, other: &Self) {
        self.add(other.sum);
        self.add(other.comp);
    }

    #[inline]
    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`, roughly 32
/// significant digits.
#[derive(Debug, Default, Clone, Copy, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

impl DoubleDouble {
    pub fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    pub fn add_f64(self, b: f64) -> Self {
        let (s, e) = two_sum(self.hi, b);
        let (hi, lo) = quick_two_sum(s, e + self.lo);
        Self { hi, lo }
    }

    pub fn add_dd(self, b: Self) -> Self {
        let (s, e1) = two_sum(self.hi, b.hi);
        let (t, e2) = two_sum(self.lo, b.lo);
        let (s, e1) = quick_two_sum(s, e1 + t);
        let (hi, lo) = quick_two_sum(s, e1 + e2);
        Self { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

impl Accumulator for DoubleDouble {
    #[inline]
    fn add(&mut self, x: f64) {
        *self = self.add_f64(x);
    }

    fn merge(&mut self, other: &Self) {
        *self = self.add_dd(*other);
    }

    fn value(&self) -> f64 {
        self.to_f64()
    }
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    /// Neumaier compensated summation.
    #[default]
    Compensated,
    /// Double-double accumulation, for validation runs.
    DoubleDouble,
}

/// How grid sums are evaluated. The result is bit-identical for every worker
/// count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SumOptions {
    pub workers: usize,
    pub precision: Precision,
}

impl Default for SumOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            precision: Precision::Compensated,
        }
    }
}

impl SumOptions {
    pub fn with_workers(workers: usize) -> Self {
        Self {
            workers,
            ..Self::default()
        }
    }
}

/// Sums `K` per-index quantities over `0..len`.
pub(crate) fn grid_sum<const K: usize, F>(len: usize, opts: &SumOptions, term: F) -> Result<[f64; K]>
where
    F: Fn(usize) -> Result<[f64; K]> + Sync,
{
    match opts.precision {
        Precision::Compensated => grid_sum_with::<NeumaierSum, K, F>(len, opts.workers, term),
        Precision::DoubleDouble => grid_sum_with::<DoubleDouble, K, F>(len, opts.workers, term),
    }
}

fn grid_sum_with<A, const K: usize, F>(len: usize, workers: usize, term: F) -> Result<[f64; K]>
where
    A: Accumulator,
    F: Fn(usize) -> Result<[f64; K]> + Sync,
{
    if workers == 0 {
        return Err(Error::param("worker count must be at least 1"));
    }
    let blocks = len.div_ceil(BLOCK_LEN);
    let block = |b: usize| -> Result<[A; K]> {
        let mut acc = [A::default(); K];
        for i in b * BLOCK_LEN..((b + 1) * BLOCK_LEN).min(len) {
            let v = term(i)?;
            for (a, x) in acc.iter_mut().zip(v) {
                a.add(x);
            }
        }
        Ok(acc)
    };

    let partials: Vec<[A; K]> = if workers == 1 || blocks < 2 {
        (0..blocks).map(block).collect::<Result<_>>()?
    } else {
        parallel_blocks(blocks, workers, &block)?
    };

    let mut total = [A::default(); K];
    for p in &partials {
        for (t, x) in total.iter_mut().zip(p) {
            t.merge(x);
        }
    }
    Ok(total.map(|a| a.value()))
}

#[cfg(feature = "parallel")]
fn parallel_blocks<T, F>(blocks: usize, workers: usize, block: &F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::ThreadPool(e.to_string()))?;
    pool.install(|| (0..blocks).into_par_iter().map(block).collect())
}

#[cfg(not(feature = "parallel"))]
fn parallel_blocks<T, F>(blocks: usize, _workers: usize, block: &F) -> Result<Vec<T>>
where
    F: Fn(usize) -> Result<T>,
{
    (0..blocks).map(block).collect()
}
