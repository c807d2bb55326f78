//! Streaming given-data estimator of first-order Sobol' indices.
//!
//! For each input `X_i` the output samples are binned by a fixed partition
//! of the input's range. Each bin keeps [`RunningMoments`] of the outputs
//! that fell into it, and one global accumulator keeps the moments of all
//! outputs. At finalization
//!
//! ```text
//! EV_i = sum_k s_k^2 * n_k / N        S_i = 1 - EV_i / V
//! ```
//!
//! where `s_k^2` is the Bessel-corrected variance of bin `k` and `V` the
//! variance of all outputs. Unequal bin probabilities are absorbed by the
//! weights `n_k / N`, so the estimator is valid for any partition.
//!
//! The accumulator never retains raw samples: its size is `O(d * M)`
//! regardless of how many samples are ingested.

use ndarray::{ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};
use crate::partition::{Partition, PartitionConfig, Scheme};
use crate::streamstats::RunningMoments;

#[derive(Debug, Clone, PartialEq)]
pub struct SobolAccumulator {
    pub(crate) partitions: Vec<Partition>,
    /// `cells[i][k]`: moments of outputs whose input `i` fell in bin `k`.
    pub(crate) cells: Vec<Vec<RunningMoments>>,
    pub(crate) total: RunningMoments,
    pub(crate) n_seen: u64,
}

/// Finalized first-order index estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolResult {
    /// First-order index estimate per input. May be negative from noise.
    pub s: Vec<f64>,
    /// Weighted mean within-bin variance per input.
    pub ev: Vec<f64>,
    /// Sample count per bin, per input.
    pub bin_counts: Vec<Vec<u64>>,
    /// Sample variance of all outputs.
    pub total_variance: f64,
    pub n: u64,
    /// Effective bin count per input.
    pub bins: Vec<usize>,
    pub scheme: Scheme,
}

impl SobolResult {
    pub fn dim(&self) -> usize {
        self.s.len()
    }
}

fn check_batch(x: &ArrayView2<f64>, y: &ArrayView1<f64>, d: Option<usize>) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} output values", x.nrows()),
            found: format!("{}", y.len()),
        });
    }
    if let Some(d) = d {
        if x.ncols() != d {
            return Err(Error::ShapeMismatch {
                expected: format!("{d} input columns"),
                found: format!("{}", x.ncols()),
            });
        }
    }
    check_finite(y.iter().copied())?;
    for (i, column) in x.axis_iter(Axis(1)).enumerate() {
        check_finite(column.iter().copied()).map_err(|e| e.for_input(i))?;
    }
    Ok(())
}

/// Two-pass per-bin moments of one batch, merged into `cells`.
fn ingest_column(partition: &Partition, cells: &mut [RunningMoments], column: &[f64], y: &[f64]) {
    let m = cells.len();
    let mut bin = Vec::with_capacity(column.len());
    let mut count = vec![0u64; m];
    let mut sum = vec![0.0f64; m];
    for (&v, &out) in column.iter().zip(y) {
        let k = partition.bin_of(v);
        bin.push(k as u32);
        count[k] += 1;
        sum[k] += out;
    }
    let mean: Vec<f64> = sum
        .iter()
        .zip(&count)
        .map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let mut uv = vec![0.0f64; m];
    for (&k, &out) in bin.iter().zip(y) {
        let d = out - mean[k as usize];
        uv[k as usize] += d * d;
    }
    for k in 0..m {
        if count[k] > 0 {
            cells[k].merge_in(&RunningMoments {
                n: count[k],
                mean: mean[k],
                uv: uv[k],
            });
        }
    }
}

impl SobolAccumulator {
    /// Empty accumulator over fixed partitions, one per input.
    pub fn with_partitions(partitions: Vec<Partition>) -> Result<Self> {
        if partitions.is_empty() {
            return Err(Error::InvalidParameter("at least one input is required".into()));
        }
        let cells = partitions
            .iter()
            .map(|p| vec![RunningMoments::EMPTY; p.m_effective()])
            .collect();
        Ok(SobolAccumulator {
            partitions,
            cells,
            total: RunningMoments::EMPTY,
            n_seen: 0,
        })
    }

    /// Builds one partition per input column from the initial samples and
    /// ingests those samples.
    pub fn initialize(
        init_x: ArrayView2<f64>,
        init_y: ArrayView1<f64>,
        config: &PartitionConfig,
    ) -> Result<Self> {
        check_batch(&init_x, &init_y, None)?;
        if init_x.nrows() < 2 {
            return Err(Error::InsufficientData(init_x.nrows() as u64));
        }
        let partitions = init_x
            .axis_iter(Axis(1))
            .into_par_iter()
            .enumerate()
            .map(|(i, column)| {
                let samples = column.to_vec();
                Partition::build(&samples, config).map_err(|e| e.for_input(i))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut acc = Self::with_partitions(partitions)?;
        acc.ingest_unchecked(init_x, init_y);
        Ok(acc)
    }

    /// Adds a batch of `b` samples (`x` is `b x d`, `y` has length `b`).
    pub fn ingest_batch(&mut self, x: ArrayView2<f64>, y: ArrayView1<f64>) -> Result<()> {
        check_batch(&x, &y, Some(self.dim()))?;
        self.ingest_unchecked(x, y);
        Ok(())
    }

    fn ingest_unchecked(&mut self, x: ArrayView2<f64>, y: ArrayView1<f64>) {
        if y.is_empty() {
            return;
        }
        let y = y.as_standard_layout();
        let y = y.as_slice().expect("standard layout");
        // Column-contiguous view of the batch: rows of `xt` are input columns.
        let xt = x.t();
        let xt = xt.as_standard_layout();
        self.partitions
            .par_iter()
            .zip(self.cells.par_iter_mut())
            .zip(xt.axis_iter(Axis(0)).into_par_iter())
            .for_each(|((partition, cells), column)| {
                let column = column.to_slice().expect("contiguous column");
                ingest_column(partition, cells, column, y);
            });
        self.total.merge_in(&RunningMoments::from_finite(y));
        self.n_seen += y.len() as u64;
    }

    /// Combines an accumulator built over a disjoint sample shard. Both
    /// must share identical partitions.
    pub fn merge(&mut self, other: &SobolAccumulator) -> Result<()> {
        if self.partitions != other.partitions {
            return Err(Error::PartitionMismatch);
        }
        for (mine, theirs) in self.cells.iter_mut().zip(&other.cells) {
            for (a, b) in mine.iter_mut().zip(theirs) {
                a.merge_in(b);
            }
        }
        self.total.merge_in(&other.total);
        self.n_seen += other.n_seen;
        Ok(())
    }

    /// Estimates the indices from everything ingested so far. The
    /// accumulator is left untouched, so this doubles as a snapshot.
    pub fn finalize(&self) -> Result<SobolResult> {
        if self.n_seen < 2 {
            return Err(Error::InsufficientData(self.n_seen));
        }
        let total_variance = self.total.sample_variance();
        if total_variance <= 0.0 {
            return Err(Error::ZeroVariance);
        }
        let n = self.n_seen as f64;
        let ev: Vec<f64> = self
            .cells
            .iter()
            .map(|cells| {
                cells
                    .iter()
                    .map(|c| c.sample_variance() * (c.n as f64 / n))
                    .sum()
            })
            .collect();
        Ok(SobolResult {
            s: ev.iter().map(|e| 1.0 - e / total_variance).collect(),
            ev,
            bin_counts: self
                .cells
                .iter()
                .map(|cells| cells.iter().map(|c| c.n).collect())
                .collect(),
            total_variance,
            n: self.n_seen,
            bins: self.partitions.iter().map(Partition::m_effective).collect(),
            scheme: self.scheme(),
        })
    }

    pub fn dim(&self) -> usize {
        self.partitions.len()
    }

    pub fn n_seen(&self) -> u64 {
        self.n_seen
    }

    pub fn scheme(&self) -> Scheme {
        self.partitions[0].scheme()
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    pub fn cells(&self, input: usize) -> &[RunningMoments] {
        &self.cells[input]
    }

    pub fn total(&self) -> &RunningMoments {
        &self.total
    }

    /// Number of moment triples held: one per bin per input plus the total.
    pub fn moment_cells(&self) -> usize {
        self.cells.iter().map(Vec::len).sum::<usize>() + 1
    }

    /// Heap bytes owned by the accumulator (partitions and moment cells).
    pub fn heap_bytes(&self) -> usize {
        use std::mem::size_of;
        let edges: usize = self
            .partitions
            .iter()
            .map(|p| p.interior_edges().len() * size_of::<f64>())
            .sum();
        let cells: usize = self
            .cells
            .iter()
            .map(|c| c.capacity() * size_of::<RunningMoments>())
            .sum();
        edges
            + cells
            + self.partitions.capacity() * size_of::<Partition>()
            + self.cells.capacity() * size_of::<Vec<RunningMoments>>()
    }
}

/// Partitions on the full sample set, ingests it in one batch and finalizes.
pub fn all_at_once(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    config: &PartitionConfig,
) -> Result<SobolResult> {
    SobolAccumulator::initialize(x, y, config)?.finalize()
}
