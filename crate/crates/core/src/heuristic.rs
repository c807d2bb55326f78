//! Screening of indices indistinguishable from zero.
//!
//! Zero-valued indices estimated from finite data scatter roughly
//! symmetrically about zero. The negative estimates in a collection are
//! therefore treated as draws from that noise distribution: reflected
//! across the origin, they give a zero-mean sample whose standard deviation
//! sets a `k * sigma` cutoff below which indices are discarded.

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};

pub const DEFAULT_K: f64 = 4.0;

/// Description of the noise estimate recorded alongside results.
pub const SIGMA_CONVENTION: &str =
    "symmetrized negatives {s<0} U {-s}: zero-mean sum of squares over 2m-1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseThreshold {
    pub sigma: f64,
    pub k: f64,
    /// `k * sigma`.
    pub threshold: f64,
    pub n_negative: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Screening {
    /// `(input index, index value)` above the threshold, largest first.
    pub significant: Vec<(usize, f64)>,
    pub threshold: NoiseThreshold,
    /// Sum of the significant indices.
    pub explained: f64,
}

/// Noise level estimated from the strictly negative entries of `indices`.
pub fn noise_sigma(indices: &[f64], k: f64) -> Result<NoiseThreshold> {
    if !(k.is_finite() && k >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold multiplier must be finite and nonnegative, got {k}"
        )));
    }
    check_finite(indices.iter().copied())?;
    let (m, sum_sq) = indices
        .iter()
        .filter(|&&s| s < 0.0)
        .fold((0usize, 0.0f64), |(m, acc), &s| (m + 1, acc + s * s));
    if m == 0 {
        return Err(Error::NoNegativeIndices);
    }
    // Each negative contributes twice (itself and its reflection).
    let sigma = (2.0 * sum_sq / (2 * m - 1) as f64).sqrt();
    Ok(NoiseThreshold {
        sigma,
        k,
        threshold: k * sigma,
        n_negative: m,
    })
}

/// Keeps the indices strictly above `k * sigma`.
pub fn filter(indices: &[f64], k: f64) -> Result<Screening> {
    let threshold = noise_sigma(indices, k)?;
    Ok(screen(indices, threshold))
}

/// Applies an already estimated threshold.
pub fn screen(indices: &[f64], threshold: NoiseThreshold) -> Screening {
    let mut significant: Vec<(usize, f64)> = indices
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, s)| s > threshold.threshold)
        .collect();
    significant.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let explained = significant.iter().map(|&(_, s)| s).sum();
    Screening {
        significant,
        threshold,
        explained,
    }
}
