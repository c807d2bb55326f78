//! Exact per-bin statistics of the polynomial model with normal inputs.
//!
//! For a bin `A` of input `X_i` the given-data estimator approximates
//! `E[V(f | X_i) | X_i in A]` by the output variance within the bin, which
//! by the law of total variance also contains `V(E[f | X_i] | X_i in A)`.
//! Both terms are computed here by quadrature against the input density.

use serde::{Deserialize, Serialize};

use super::quadrature::integrate;
use super::{InputLaw, ModelSpec};
use crate::error::{Error, Result};
use crate::partition::Partition;

const ABS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactBinStat {
    pub lower: f64,
    pub upper: f64,
    /// `P(X_i in A_k)` from the exact CDF.
    pub probability: f64,
    /// `E[V(f | X_i) | X_i in A_k]`.
    pub mean_conditional_variance: f64,
    /// `V(E[f | X_i] | X_i in A_k)`, the part the binned variance adds.
    pub conditional_mean_variance: f64,
}

impl ExactBinStat {
    /// `V(f | X_i in A_k)`, the quantity a bin's sample variance estimates.
    pub fn within_bin_variance(&self) -> f64 {
        self.mean_conditional_variance + self.conditional_mean_variance
    }
}

struct NormalPolynomial {
    a: f64,
    b: f64,
    c: f64,
    mean: f64,
    std: f64,
}

impl NormalPolynomial {
    fn from_spec(spec: &ModelSpec) -> Result<Self> {
        match *spec {
            ModelSpec::Polynomial {
                a,
                b,
                c,
                law: InputLaw::Normal { mean, std },
            } => Ok(NormalPolynomial { a, b, c, mean, std }),
            _ => Err(Error::NoClosedForm(format!(
                "exact bin statistics need the polynomial model with normal inputs, got {}",
                spec.name()
            ))),
        }
    }

    fn var(&self) -> f64 {
        self.std * self.std
    }

    fn second_moment(&self) -> f64 {
        self.var() + self.mean * self.mean
    }

    /// `Var(X^2)` and `Cov(X^2, X)` of one normal input.
    fn square_moments(&self) -> (f64, f64) {
        let (m, v) = (self.mean, self.var());
        (4.0 * m * m * v + 2.0 * v * v, 2.0 * m * v)
    }

    fn total_variance(&self) -> f64 {
        let (a, b, c, m) = (self.a, self.b, self.c, self.mean);
        let (var_sq, cov_sq) = self.square_moments();
        // E_x2[(a + c x2)^2] Var(X1) + Var(b X2^2 + c m X2)
        self.var() * (a * a + 2.0 * a * c * m + c * c * self.second_moment())
            + b * b * var_sq
            + c * c * m * m * self.var()
            + 2.0 * b * c * m * cov_sq
    }

    fn conditional_variance(&self, input: usize, x: f64) -> f64 {
        let (a, b, c) = (self.a, self.b, self.c);
        match input {
            0 => {
                let (var_sq, cov_sq) = self.square_moments();
                b * b * var_sq + c * c * x * x * self.var() + 2.0 * b * c * x * cov_sq
            }
            1 => (a + c * x) * (a + c * x) * self.var(),
            _ => self.total_variance(),
        }
    }

    fn conditional_mean(&self, input: usize, x: f64) -> f64 {
        let (a, b, c, m) = (self.a, self.b, self.c, self.mean);
        match input {
            0 => a * x + b * self.second_moment() + c * x * m,
            1 => a * m + b * x * x + c * m * x,
            _ => a * m + b * self.second_moment() + c * m * m,
        }
    }
}

fn check_input(spec: &ModelSpec, input: usize) -> Result<()> {
    if input >= spec.dim() {
        return Err(Error::InvalidParameter(format!(
            "input index {input} out of range for {} inputs",
            spec.dim()
        )));
    }
    Ok(())
}

/// Pointwise `V(f | X_i = x)`.
pub fn conditional_variance(spec: &ModelSpec, input: usize, x: f64) -> Result<f64> {
    check_input(spec, input)?;
    Ok(NormalPolynomial::from_spec(spec)?.conditional_variance(input, x))
}

/// Pointwise `E[f | X_i = x]`.
pub fn conditional_mean(spec: &ModelSpec, input: usize, x: f64) -> Result<f64> {
    check_input(spec, input)?;
    Ok(NormalPolynomial::from_spec(spec)?.conditional_mean(input, x))
}

/// Exact statistics for every bin of `partition` over input `input`.
pub fn exact_bin_statistics(
    spec: &ModelSpec,
    input: usize,
    partition: &Partition,
) -> Result<Vec<ExactBinStat>> {
    check_input(spec, input)?;
    let model = NormalPolynomial::from_spec(spec)?;
    let law = InputLaw::Normal {
        mean: model.mean,
        std: model.std,
    };
    let stats = (0..partition.m_effective())
        .map(|k| {
            let (lower, upper) = partition.bin_bounds(k);
            let probability = law.bin_probability(lower, upper);
            if probability <= 0.0 {
                return ExactBinStat {
                    lower,
                    upper,
                    probability: 0.0,
                    mean_conditional_variance: f64::NAN,
                    conditional_mean_variance: f64::NAN,
                };
            }
            let expect = |g: &dyn Fn(f64) -> f64| {
                integrate(|x| g(x) * law.pdf(x), lower, upper, ABS_TOL * probability).value
                    / probability
            };
            let mean_conditional_variance =
                expect(&|x| model.conditional_variance(input, x));
            let bin_mean = expect(&|x| model.conditional_mean(input, x));
            let conditional_mean_variance = expect(&|x| {
                let d = model.conditional_mean(input, x) - bin_mean;
                d * d
            });
            ExactBinStat {
                lower,
                upper,
                probability,
                mean_conditional_variance,
                conditional_mean_variance,
            }
        })
        .collect();
    Ok(stats)
}
