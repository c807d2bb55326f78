//! Mergeable first and second moment accumulators.
//!
//! A [`RunningMoments`] holds a sample count, the sample mean and the
//! unscaled variance (the sum of squared deviations from the mean). Two
//! accumulators over disjoint sample sets combine exactly with the pairwise
//! update of Chan, Golub and LeVeque, so statistics can be built batch by
//! batch or by a parallel reduction tree.

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RunningMoments {
    pub n: u64,
    pub mean: f64,
    /// Sum of squared deviations from `mean`.
    pub uv: f64,
}

impl RunningMoments {
    pub const EMPTY: RunningMoments = RunningMoments {
        n: 0,
        mean: 0.0,
        uv: 0.0,
    };

    pub fn new() -> Self {
        Self::EMPTY
    }

    /// Exact two-pass moments of `values`. Rejects non-finite entries.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        check_finite(values.iter().copied())?;
        Ok(Self::from_finite(values))
    }

    /// Two-pass moments without the finiteness check.
    pub(crate) fn from_finite(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::EMPTY;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let uv = values.iter().map(|x| (x - mean) * (x - mean)).sum();
        RunningMoments {
            n: n as u64,
            mean,
            uv,
        }
    }

    /// Adds a single observation (Welford update).
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.uv += delta * (x - self.mean);
    }

    /// Combines the moments of two disjoint sample sets.
    pub fn merge(&self, other: &RunningMoments) -> RunningMoments {
        if other.n == 0 {
            return *self;
        }
        if self.n == 0 {
            return *other;
        }
        let n = self.n + other.n;
        let (na, nb, nf) = (self.n as f64, other.n as f64, n as f64);
        let delta = other.mean - self.mean;
        RunningMoments {
            n,
            mean: self.mean + (nb / nf) * delta,
            uv: self.uv + other.uv + (na * nb / nf) * delta * delta,
        }
    }

    pub fn merge_in(&mut self, other: &RunningMoments) {
        *self = self.merge(other);
    }

    /// Bessel-corrected variance; 0 for fewer than two samples.
    pub fn sample_variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.uv / (self.n - 1) as f64
        }
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

impl FromIterator<f64> for RunningMoments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = RunningMoments::EMPTY;
        for x in iter {
            m.push(x);
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m(n: u64, mean: f64, uv: f64) -> RunningMoments {
        RunningMoments { n, mean, uv }
    }

    #[test]
    fn from_values_examples() {
        assert_eq!(RunningMoments::from_values(&[]).unwrap(), RunningMoments::EMPTY);
        assert_eq!(RunningMoments::from_values(&[0.0, 2.0, 4.0]).unwrap(), m(3, 2.0, 8.0));
        assert_eq!(RunningMoments::from_values(&[5.0]).unwrap(), m(1, 5.0, 0.0));
    }

    #[test]
    fn from_values_rejects_non_finite() {
        let err = RunningMoments::from_values(&[1.0, f64::NAN]).unwrap_err();
        assert!(matches!(err, crate::Error::NonFinite { position: 1, .. }));
        assert!(RunningMoments::from_values(&[f64::INFINITY]).is_err());
    }

    #[test]
    fn merge_examples() {
        assert_eq!(m(3, 2.0, 8.0).merge(&m(1, 10.0, 0.0)), m(4, 4.0, 56.0));
        assert_eq!(RunningMoments::EMPTY.merge(&m(7, 1.5, 3.25)), m(7, 1.5, 3.25));
        assert_eq!(m(7, 1.5, 3.25).merge(&RunningMoments::EMPTY), m(7, 1.5, 3.25));
        assert_eq!(m(1, 0.0, 0.0).merge(&m(1, 2.0, 0.0)), m(2, 1.0, 2.0));
    }

    #[test]
    fn sample_variance_examples() {
        assert_relative_eq!(m(4, 4.0, 56.0).sample_variance(), 56.0 / 3.0);
        assert_eq!(m(1, 5.0, 0.0).sample_variance(), 0.0);
        assert_eq!(RunningMoments::EMPTY.sample_variance(), 0.0);
        assert_eq!(m(2, 1.0, 2.0).sample_variance(), 2.0);
    }

    #[test]
    fn push_matches_two_pass() {
        let xs = [3.0, -1.0, 4.0, 1.0, -5.0, 9.0, 2.0, 6.0];
        let pushed: RunningMoments = xs.iter().copied().collect();
        let exact = RunningMoments::from_values(&xs).unwrap();
        assert_eq!(pushed.n, exact.n);
        assert_relative_eq!(pushed.mean, exact.mean, max_relative = 1e-14);
        assert_relative_eq!(pushed.uv, exact.uv, max_relative = 1e-13);
    }
}
