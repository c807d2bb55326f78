//! Input-space partitions with implicit infinite outer edges.
//!
//! A partition of the real line into `M` bins is stored as its `M - 1`
//! interior edges. Bin `k` (0-based) is `[edge[k-1], edge[k])` with
//! `edge[-1] = -inf` and `edge[M-1] = +inf`, so every finite value lands in
//! exactly one bin and values outside the initial sample range fall into an
//! outermost bin.

mod kde;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};

pub use kde::{kde_edges, KdeCdf, KDE_GRID_POINTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Equiprobable edges from sample quantiles.
    Quantile,
    /// Equiprobable edges from a Gaussian kernel density estimate.
    Kde,
    /// Equal-width edges over the sample range.
    Equidistant,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Quantile => "quantile",
            Scheme::Kde => "kde",
            Scheme::Equidistant => "equidistant",
        }
    }

    pub fn is_equiprobable(&self) -> bool {
        matches!(self, Scheme::Quantile | Scheme::Kde)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quantile" => Ok(Scheme::Quantile),
            "kde" => Ok(Scheme::Kde),
            "equidistant" => Ok(Scheme::Equidistant),
            other => Err(Error::InvalidParameter(format!(
                "unknown partition scheme '{other}' (expected quantile, kde or equidistant)"
            ))),
        }
    }
}

/// How to build a partition from initial samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionConfig {
    pub scheme: Scheme,
    /// Requested bin count `M`.
    pub bins: usize,
    /// Quantile levels bounding the equidistant range. Ignored by the
    /// equiprobable schemes.
    pub truncation: Option<(f64, f64)>,
}

impl PartitionConfig {
    pub fn new(scheme: Scheme, bins: usize) -> Self {
        PartitionConfig {
            scheme,
            bins,
            truncation: None,
        }
    }

    pub fn with_truncation(mut self, lo: f64, hi: f64) -> Self {
        self.truncation = Some((lo, hi));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    interior_edges: Vec<f64>,
    scheme: Scheme,
    requested_bins: usize,
    /// Number of duplicate edges removed during construction.
    collapsed_edges: usize,
}

impl Partition {
    /// Builds a partition from explicit interior edges, which must be finite
    /// and strictly increasing. An empty edge list is the single-bin
    /// partition of the whole line.
    pub fn from_edges(interior_edges: Vec<f64>, scheme: Scheme) -> Result<Self> {
        check_finite(interior_edges.iter().copied())?;
        if let Some(w) = interior_edges.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!(
                "partition edges must be strictly increasing ({} >= {})",
                w[0], w[1]
            )));
        }
        let requested_bins = interior_edges.len() + 1;
        Ok(Partition {
            interior_edges,
            scheme,
            requested_bins,
            collapsed_edges: 0,
        })
    }

    /// Builds a partition of `samples` according to `config`.
    pub fn build(samples: &[f64], config: &PartitionConfig) -> Result<Self> {
        match config.scheme {
            Scheme::Quantile => quantile_edges(samples, config.bins),
            Scheme::Kde => kde_edges(samples, config.bins),
            Scheme::Equidistant => equidistant_edges(samples, config.bins, config.truncation),
        }
    }

    /// Sorts candidate edges into a partition, collapsing exact duplicates.
    fn from_candidates(mut candidates: Vec<f64>, scheme: Scheme, requested_bins: usize) -> Result<Self> {
        candidates.sort_by(f64::total_cmp);
        let before = candidates.len();
        candidates.dedup();
        Ok(Partition {
            collapsed_edges: before - candidates.len(),
            interior_edges: candidates,
            scheme,
            requested_bins,
        })
    }

    pub fn interior_edges(&self) -> &[f64] {
        &self.interior_edges
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn requested_bins(&self) -> usize {
        self.requested_bins
    }

    /// Bin count after duplicate-edge collapse.
    pub fn m_effective(&self) -> usize {
        self.interior_edges.len() + 1
    }

    pub fn collapsed_edges(&self) -> usize {
        self.collapsed_edges
    }

    pub(crate) fn set_provenance(&mut self, requested_bins: usize, collapsed_edges: usize) {
        self.requested_bins = requested_bins;
        self.collapsed_edges = collapsed_edges;
    }

    /// Degenerate-partition warning, present when duplicate edges were merged.
    pub fn warning(&self) -> Option<String> {
        (self.collapsed_edges > 0).then(|| {
            format!(
                "{} duplicate {} edge(s) collapsed: {} of {} requested bins remain",
                self.collapsed_edges,
                self.scheme,
                self.m_effective(),
                self.requested_bins
            )
        })
    }

    /// Bin of a single value. Values must be finite (NaN lands in the last bin).
    #[inline]
    pub fn bin_of(&self, v: f64) -> usize {
        self.interior_edges.partition_point(|&e| e <= v)
    }

    /// Bin index for every value, rejecting non-finite input.
    pub fn assign_bins(&self, values: &[f64]) -> Result<Vec<usize>> {
        check_finite(values.iter().copied())?;
        Ok(values.iter().map(|&v| self.bin_of(v)).collect())
    }

    /// Occupancy of each bin for `values`.
    pub fn bin_counts(&self, values: &[f64]) -> Result<Vec<u64>> {
        let mut counts = vec![0u64; self.m_effective()];
        for k in self.assign_bins(values)? {
            counts[k] += 1;
        }
        Ok(counts)
    }

    /// Finite lower and upper bounds of bin `k` (infinite for outer bins).
    pub fn bin_bounds(&self, k: usize) -> (f64, f64) {
        let lo = if k == 0 {
            f64::NEG_INFINITY
        } else {
            self.interior_edges[k - 1]
        };
        let hi = self
            .interior_edges
            .get(k)
            .copied()
            .unwrap_or(f64::INFINITY);
        (lo, hi)
    }
}

fn check_bins(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!(
            "bin count must be at least 2, got {m}"
        )));
    }
    Ok(())
}

fn sorted_finite(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    check_finite(samples.iter().copied())?;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted)
}

/// Hyndman-Fan definition 4 sample quantile (linear interpolation of the
/// empirical CDF) of ascending `sorted` at level `p`.
///
/// With `h = n p` and 1-based order statistics `x_j`, returns
/// `x_floor(h) + (h - floor(h)) (x_floor(h)+1 - x_floor(h))`, clamped to
/// `x_1` for `h < 1` and `x_n` for `h >= n`.
pub fn quantile_def4(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "quantile of an empty sample");
    let h = n as f64 * p;
    if h < 1.0 {
        return sorted[0];
    }
    if h >= n as f64 {
        return sorted[n - 1];
    }
    let j = h.floor();
    let lower = sorted[j as usize - 1];
    let upper = sorted[j as usize];
    lower + (h - j) * (upper - lower)
}

/// Equiprobable partition from sample quantiles at levels `k / m`.
pub fn quantile_edges(init_samples: &[f64], m: usize) -> Result<Partition> {
    check_bins(m)?;
    let sorted = sorted_finite(init_samples)?;
    if sorted[0] == sorted[sorted.len() - 1] {
        return Err(Error::DegeneratePartition(format!(
            "all initial samples equal {}",
            sorted[0]
        )));
    }
    let candidates = (1..m)
        .map(|k| quantile_def4(&sorted, k as f64 / m as f64))
        .collect();
    Partition::from_candidates(candidates, Scheme::Quantile, m)
}

/// Equal-width partition over the sample range, or over the quantiles at
/// the `truncation` levels when given.
pub fn equidistant_edges(
    init_samples: &[f64],
    m: usize,
    truncation: Option<(f64, f64)>,
) -> Result<Partition> {
    check_bins(m)?;
    let (lo, hi) = match truncation {
        None => {
            if init_samples.is_empty() {
                return Err(Error::EmptySamples);
            }
            check_finite(init_samples.iter().copied())?;
            init_samples
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
        }
        Some((p_lo, p_hi)) => {
            if !(0.0..=1.0).contains(&p_lo) || !(0.0..=1.0).contains(&p_hi) || p_lo >= p_hi {
                return Err(Error::InvalidParameter(format!(
                    "truncation levels must satisfy 0 <= lo < hi <= 1, got ({p_lo}, {p_hi})"
                )));
            }
            let sorted = sorted_finite(init_samples)?;
            (quantile_def4(&sorted, p_lo), quantile_def4(&sorted, p_hi))
        }
    };
    if lo >= hi {
        return Err(Error::DegenerateRange(lo));
    }
    let width = (hi - lo) / m as f64;
    let candidates = (1..m).map(|k| lo + k as f64 * width).collect();
    Partition::from_candidates(candidates, Scheme::Equidistant, m)
}
