//! Brute-force reference indices by ultra-fine binning.
//!
//! Used as ground truth where no closed form exists. The binning here is
//! deliberately separate from the streaming estimator: equal-width bins are
//! located by direct arithmetic and bin variances come from shifted power
//! sums rather than merged moment triples.

use rayon::prelude::*;

use super::{generate, ModelSpec, ReferenceIndices};
use crate::error::{Error, Result};

pub const ORACLE_BINS: usize = 10_000;
const CHUNK: usize = 100_000;
const CHUNKS_PER_ROUND: usize = 8;

/// Per-bin shifted sums `(count, sum(y - c), sum((y - c)^2))`.
#[derive(Clone)]
struct Sums {
    count: Vec<f64>,
    s1: Vec<f64>,
    s2: Vec<f64>,
}

impl Sums {
    fn new(len: usize) -> Self {
        Sums {
            count: vec![0.0; len],
            s1: vec![0.0; len],
            s2: vec![0.0; len],
        }
    }

    fn add(&mut self, other: &Sums) {
        for k in 0..self.count.len() {
            self.count[k] += other.count[k];
            self.s1[k] += other.s1[k];
            self.s2[k] += other.s2[k];
        }
    }

    fn variance(&self, k: usize) -> f64 {
        let n = self.count[k];
        if n < 2.0 {
            return 0.0;
        }
        (self.s2[k] - self.s1[k] * self.s1[k] / n) / (n - 1.0)
    }
}

/// Reference indices from `n_oracle` samples binned into [`ORACLE_BINS`]
/// equal-width bins per input. At least `10^6` samples are recommended;
/// `10^7` gives two significant digits on the polynomial models.
pub fn oracle_indices(spec: &ModelSpec, n_oracle: usize, seed: u64) -> Result<ReferenceIndices> {
    if n_oracle < 2 * CHUNK {
        return Err(Error::InvalidParameter(format!(
            "oracle needs at least {} samples, got {n_oracle}",
            2 * CHUNK
        )));
    }
    let d = spec.dim();
    let pilot = generate(spec, 0, CHUNK, seed)?;
    let shift = pilot.y.mean().unwrap_or(0.0);
    let ranges: Vec<(f64, f64)> = pilot
        .x
        .columns()
        .into_iter()
        .map(|c| {
            let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo, (hi - lo) / ORACLE_BINS as f64)
        })
        .collect();

    let chunk_sums = |chunk: usize| -> Result<(Vec<Sums>, Sums)> {
        let start = chunk * CHUNK;
        let rows = CHUNK.min(n_oracle - start);
        let sample = generate(spec, start as u64, rows, seed)?;
        let mut total = Sums::new(1);
        for &y in &sample.y {
            let dy = y - shift;
            total.count[0] += 1.0;
            total.s1[0] += dy;
            total.s2[0] += dy * dy;
        }
        let per_input = sample
            .x
            .columns()
            .into_iter()
            .zip(&ranges)
            .map(|(column, &(lo, width))| {
                let mut sums = Sums::new(ORACLE_BINS);
                for (&v, &y) in column.iter().zip(&sample.y) {
                    let k = if width > 0.0 {
                        (((v - lo) / width).floor().max(0.0) as usize).min(ORACLE_BINS - 1)
                    } else {
                        0
                    };
                    let dy = y - shift;
                    sums.count[k] += 1.0;
                    sums.s1[k] += dy;
                    sums.s2[k] += dy * dy;
                }
                sums
            })
            .collect();
        Ok((per_input, total))
    };

    let n_chunks = n_oracle.div_ceil(CHUNK);
    let mut bins = vec![Sums::new(ORACLE_BINS); d];
    let mut total = Sums::new(1);
    for round in (0..n_chunks).collect::<Vec<_>>().chunks(CHUNKS_PER_ROUND) {
        let partials = round
            .par_iter()
            .map(|&c| chunk_sums(c))
            .collect::<Result<Vec<_>>>()?;
        for (per_input, t) in partials {
            total.add(&t);
            for (acc, p) in bins.iter_mut().zip(&per_input) {
                acc.add(p);
            }
        }
    }

    let variance = total.variance(0);
    if variance <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let n = total.count[0];
    let first_order = bins
        .iter()
        .map(|sums| {
            let ev: f64 = (0..ORACLE_BINS)
                .map(|k| sums.variance(k) * sums.count[k] / n)
                .sum();
            1.0 - ev / variance
        })
        .collect();
    Ok(ReferenceIndices {
        variance,
        first_order,
    })
}
