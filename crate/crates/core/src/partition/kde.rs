//! Equiprobable edges from a Gaussian kernel density estimate.

use super::{check_bins, sorted_finite, Partition, Scheme};
use crate::error::{Error, Result};

pub const KDE_GRID_POINTS: usize = 4096;

/// Kernel contributions beyond this many bandwidths are below 1e-14 and skipped.
const KERNEL_CUTOFF: f64 = 8.0;

/// Trapezoid-integrated CDF of a Gaussian KDE on a uniform grid.
#[derive(Debug, Clone)]
pub struct KdeCdf {
    pub bandwidth: f64,
    pub grid: Vec<f64>,
    pub cdf: Vec<f64>,
}

impl KdeCdf {
    /// Builds the estimate with Scott's rule bandwidth `sd * n^(-1/5)` on
    /// [`KDE_GRID_POINTS`] points spanning `[min - 3h, max + 3h]`.
    pub fn fit(samples: &[f64]) -> Result<Self> {
        let sorted = sorted_finite(samples)?;
        let n = sorted.len();
        if sorted[0] == sorted[n - 1] {
            return Err(Error::DegenerateDensity);
        }
        let mean = sorted.iter().sum::<f64>() / n as f64;
        let var = sorted.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        let h = var.sqrt() * (n as f64).powf(-0.2);

        let lo = sorted[0] - 3.0 * h;
        let hi = sorted[n - 1] + 3.0 * h;
        let step = (hi - lo) / (KDE_GRID_POINTS - 1) as f64;
        let grid: Vec<f64> = (0..KDE_GRID_POINTS).map(|j| lo + j as f64 * step).collect();

        // The normalizing constant cancels once the CDF is rescaled to 1.
        let density: Vec<f64> = grid
            .iter()
            .map(|&g| {
                let start = sorted.partition_point(|&x| x < g - KERNEL_CUTOFF * h);
                let end = sorted.partition_point(|&x| x <= g + KERNEL_CUTOFF * h);
                sorted[start..end]
                    .iter()
                    .map(|&x| {
                        let z = (g - x) / h;
                        (-0.5 * z * z).exp()
                    })
                    .sum::<f64>()
            })
            .collect();

        let mut cdf = Vec::with_capacity(KDE_GRID_POINTS);
        let mut acc = 0.0;
        cdf.push(0.0);
        for w in density.windows(2) {
            acc += 0.5 * (w[0] + w[1]) * step;
            cdf.push(acc);
        }
        let total = acc;
        for c in &mut cdf {
            *c /= total;
        }
        Ok(KdeCdf {
            bandwidth: h,
            grid,
            cdf,
        })
    }

    /// Linear-interpolation inverse of the CDF at level `q` in `[0, 1]`.
    pub fn inverse(&self, q: f64) -> f64 {
        let j = self.cdf.partition_point(|&c| c < q);
        if j == 0 {
            return self.grid[0];
        }
        if j >= self.cdf.len() {
            return self.grid[self.grid.len() - 1];
        }
        let (c0, c1) = (self.cdf[j - 1], self.cdf[j]);
        let (g0, g1) = (self.grid[j - 1], self.grid[j]);
        if c1 <= c0 {
            return g1;
        }
        g0 + (q - c0) / (c1 - c0) * (g1 - g0)
    }
}

/// Equiprobable partition from the KDE-approximated CDF at levels `k / m`.
pub fn kde_edges(init_samples: &[f64], m: usize) -> Result<Partition> {
    check_bins(m)?;
    let kde = KdeCdf::fit(init_samples)?;
    let candidates = (1..m).map(|k| kde.inverse(k as f64 / m as f64)).collect();
    Partition::from_candidates(candidates, Scheme::Kde, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_samples_split_at_zero() {
        let a = [0.3, 1.1, 2.5, 0.05, 4.0];
        let samples: Vec<f64> = a.iter().flat_map(|&x| [x, -x]).collect();
        let p = kde_edges(&samples, 2).unwrap();
        let kde = KdeCdf::fit(&samples).unwrap();
        let step = kde.grid[1] - kde.grid[0];
        assert!(p.interior_edges()[0].abs() < step, "{:?}", p.interior_edges());
    }

    #[test]
    fn cdf_is_monotone_and_normalized() {
        let samples = [0.0, 0.1, 0.1, 0.2, 3.0, 3.5, 7.0];
        let kde = KdeCdf::fit(&samples).unwrap();
        assert_eq!(kde.cdf[0], 0.0);
        assert!((kde.cdf[KDE_GRID_POINTS - 1] - 1.0).abs() < 1e-15);
        assert!(kde.cdf.windows(2).all(|w| w[0] <= w[1]));
        let inv: Vec<f64> = (1..100).map(|k| kde.inverse(k as f64 / 100.0)).collect();
        assert!(inv.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(kde_edges(&[2.0, 2.0, 2.0], 4), Err(Error::DegenerateDensity)));
        assert!(matches!(kde_edges(&[1.0, 2.0], 1), Err(Error::InvalidParameter(_))));
        assert!(matches!(kde_edges(&[], 4), Err(Error::EmptySamples)));
    }
}
