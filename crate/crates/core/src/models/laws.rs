use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_lr;

use super::rng::SplitMix64;
use crate::error::{Error, Result};

/// Marginal law of one model input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum InputLaw {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, std: f64 },
    Exponential { rate: f64 },
    Gamma { shape: f64, scale: f64 },
    /// `B * Z` with `B ~ Bernoulli(p)` and `Z ~ Normal(mean, std^2)`: a point
    /// mass `1 - p` at zero plus a scaled normal slab.
    SpikeSlab { p: f64, mean: f64, std: f64 },
}

/// Standard normal CDF.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

pub fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Gamma variate by Marsaglia and Tsang, boosted for `shape < 1`.
pub(crate) fn sample_gamma(shape: f64, rng: &mut SplitMix64) -> f64 {
    if shape < 1.0 {
        let u = rng.next_open01();
        return sample_gamma(shape + 1.0, rng) * u.powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let (x, v) = loop {
            let x = rng.next_normal();
            let v = 1.0 + c * x;
            if v > 0.0 {
                break (x, v * v * v);
            }
        };
        let u = rng.next_open01();
        if u < 1.0 - 0.0331 * x * x * x * x || u.ln() < 0.5 * x * x + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

impl InputLaw {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            InputLaw::Uniform { lo, hi } if !(lo.is_finite() && hi.is_finite() && lo < hi) => {
                bad(format!("uniform bounds must satisfy lo < hi, got [{lo}, {hi}]"))
            }
            InputLaw::Normal { mean, std } | InputLaw::SpikeSlab { mean, std, .. }
                if !(mean.is_finite() && std.is_finite() && std > 0.0) =>
            {
                bad(format!("normal parameters need finite mean and std > 0, got ({mean}, {std})"))
            }
            InputLaw::SpikeSlab { p, .. } if !(0.0..=1.0).contains(&p) => {
                bad(format!("spike-slab probability must lie in [0, 1], got {p}"))
            }
            InputLaw::Exponential { rate } if !(rate.is_finite() && rate > 0.0) => {
                bad(format!("exponential rate must be positive, got {rate}"))
            }
            InputLaw::Gamma { shape, scale }
                if !(shape.is_finite() && shape > 0.0 && scale.is_finite() && scale > 0.0) =>
            {
                bad(format!("gamma shape and scale must be positive, got ({shape}, {scale})"))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn sample(&self, rng: &mut SplitMix64) -> f64 {
        match *self {
            InputLaw::Uniform { lo, hi } => lo + (hi - lo) * rng.next_f64(),
            InputLaw::Normal { mean, std } => mean + std * rng.next_normal(),
            InputLaw::Exponential { rate } => -rng.next_open01().ln() / rate,
            InputLaw::Gamma { shape, scale } => scale * sample_gamma(shape, rng),
            InputLaw::SpikeSlab { p, mean, std } => {
                let on = rng.next_f64() < p;
                let z = mean + std * rng.next_normal();
                if on {
                    z
                } else {
                    0.0
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            InputLaw::Uniform { lo, hi } => 0.5 * (lo + hi),
            InputLaw::Normal { mean, .. } => mean,
            InputLaw::Exponential { rate } => 1.0 / rate,
            InputLaw::Gamma { shape, scale } => shape * scale,
            InputLaw::SpikeSlab { p, mean, .. } => p * mean,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            InputLaw::Uniform { lo, hi } => (hi - lo) * (hi - lo) / 12.0,
            InputLaw::Normal { std, .. } => std * std,
            InputLaw::Exponential { rate } => 1.0 / (rate * rate),
            InputLaw::Gamma { shape, scale } => shape * scale * scale,
            InputLaw::SpikeSlab { p, mean, std } => {
                let second = p * (std * std + mean * mean);
                second - (p * mean) * (p * mean)
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            InputLaw::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            InputLaw::Normal { mean, std } => std_normal_cdf((x - mean) / std),
            InputLaw::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            InputLaw::Gamma { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    gamma_lr(shape, x / scale)
                }
            }
            InputLaw::SpikeSlab { p, mean, std } => {
                let spike = if x >= 0.0 { 1.0 - p } else { 0.0 };
                spike + p * std_normal_cdf((x - mean) / std)
            }
        }
    }

    /// Probability of the half-open bin `[lo, hi)`.
    pub fn bin_probability(&self, lo: f64, hi: f64) -> f64 {
        match *self {
            // Upper-tail form avoids cancellation for bins far above the mean.
            InputLaw::Normal { mean, std } if lo > mean => {
                std_normal_cdf(-(lo - mean) / std) - std_normal_cdf(-(hi - mean) / std)
            }
            // P(X < hi) - P(X < lo); the spike at zero belongs to the bin containing 0.
            InputLaw::SpikeSlab { p, mean, std } => {
                let below = |x: f64| {
                    let spike = if x > 0.0 { 1.0 - p } else { 0.0 };
                    spike + p * std_normal_cdf((x - mean) / std)
                };
                below(hi) - below(lo)
            }
            _ => self.cdf(hi) - self.cdf(lo),
        }
    }

    /// Density of the continuous part (the spike-slab atom is excluded).
    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            InputLaw::Uniform { lo, hi } => {
                if (lo..hi).contains(&x) {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            InputLaw::Normal { mean, std } => std_normal_pdf((x - mean) / std) / std,
            InputLaw::Exponential { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    rate * (-rate * x).exp()
                }
            }
            InputLaw::Gamma { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    let z = x / scale;
                    ((shape - 1.0) * z.ln() - z - statrs::function::gamma::ln_gamma(shape)).exp()
                        / scale
                }
            }
            InputLaw::SpikeSlab { p, mean, std } => p * std_normal_pdf((x - mean) / std) / std,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draws(law: InputLaw, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = SplitMix64::new(seed);
        (0..n).map(|_| law.sample(&mut rng)).collect()
    }

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn sample_moments_match_laws() {
        let laws = [
            InputLaw::Uniform { lo: 0.0, hi: 1.0 },
            InputLaw::Normal { mean: 1.0, std: 2.0 },
            InputLaw::Exponential { rate: 1.0 },
            InputLaw::Gamma { shape: 2.5, scale: 0.5 },
            InputLaw::Gamma { shape: 0.3, scale: 2.0 },
            InputLaw::SpikeSlab { p: 0.5, mean: 1.0, std: 1.0 },
        ];
        for (i, law) in laws.iter().enumerate() {
            let xs = draws(*law, 400_000, 17 + i as u64);
            let (m, v) = mean_var(&xs);
            let se = (law.variance() / xs.len() as f64).sqrt();
            assert!((m - law.mean()).abs() < 5.0 * se, "{law:?}: mean {m}");
            assert!((v / law.variance() - 1.0).abs() < 0.05, "{law:?}: var {v}");
        }
    }

    #[test]
    fn spike_slab_zero_fraction() {
        let n = 100_000;
        let xs = draws(InputLaw::SpikeSlab { p: 0.5, mean: 1.0, std: 1.0 }, n, 3);
        let zeros = xs.iter().filter(|&&x| x == 0.0).count() as f64 / n as f64;
        let sd = (0.25 / n as f64).sqrt();
        assert!((zeros - 0.5).abs() < 3.0 * sd, "{zeros}");
    }

    #[test]
    fn cdfs_are_consistent_with_pdfs() {
        let law = InputLaw::Normal { mean: 0.0, std: 1.0 };
        assert!((law.cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((law.cdf(-0.6744897501960817) - 0.25).abs() < 1e-12);
        let g = InputLaw::Gamma { shape: 2.0, scale: 1.0 };
        // Gamma(2,1): F(x) = 1 - (1 + x) e^-x
        assert!((g.cdf(1.5) - (1.0 - 2.5 * (-1.5f64).exp())).abs() < 1e-12);
        assert!((g.pdf(1.5) - 1.5 * (-1.5f64).exp()).abs() < 1e-12);
        let e = InputLaw::Exponential { rate: 2.0 };
        assert!((e.cdf(0.5) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        let s = InputLaw::SpikeSlab { p: 0.5, mean: 1.0, std: 1.0 };
        assert!((s.cdf(-1e-12) - 0.5 * std_normal_cdf(-1.0)).abs() < 1e-9);
        assert!((s.cdf(0.0) - 0.5 - 0.5 * std_normal_cdf(-1.0)).abs() < 1e-15);
    }

    #[test]
    fn bin_probability_tail_form() {
        let law = InputLaw::Normal { mean: 0.0, std: 1.0 };
        let p = law.bin_probability(8.0, f64::INFINITY);
        assert!(p > 0.0 && (p - 6.22096057427178e-16).abs() < 1e-25, "{p}");
        let total: f64 = [-1.0, 0.3, 2.0]
            .windows(2)
            .map(|w| law.bin_probability(w[0], w[1]))
            .sum::<f64>()
            + law.bin_probability(f64::NEG_INFINITY, -1.0)
            + law.bin_probability(2.0, f64::INFINITY);
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        assert!(InputLaw::Normal { mean: 0.0, std: 0.0 }.validate().is_err());
        assert!(InputLaw::Exponential { rate: -1.0 }.validate().is_err());
        assert!(InputLaw::SpikeSlab { p: 1.5, mean: 0.0, std: 1.0 }.validate().is_err());
        assert!(InputLaw::Gamma { shape: 0.0, scale: 1.0 }.validate().is_err());
        assert!(InputLaw::Uniform { lo: 1.0, hi: 1.0 }.validate().is_err());
        assert!(InputLaw::Uniform { lo: 0.0, hi: 1.0 }.validate().is_ok());
    }
}
