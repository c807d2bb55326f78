//! Analytic test models: input sampling, evaluation, reference indices and
//! the exact per-bin statistics used to decompose partition bias.

mod analytic;
mod exact;
mod laws;
mod oracle;
pub mod quadrature;
pub mod rng;

use ndarray::{Array1, Array2, ArrayView2, Axis, ShapeBuilder, Zip};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use rng::StreamKey;

pub use analytic::{analytic_indices, ReferenceIndices};
pub use exact::{conditional_mean, conditional_variance, exact_bin_statistics, ExactBinStat};
pub use laws::{std_normal_cdf, std_normal_pdf, InputLaw};
pub use oracle::{oracle_indices, ORACLE_BINS};

/// Stream carrying stochastic outputs (the Gamma output model).
const OUTPUT_STREAM: u64 = u64::MAX;
/// Stream for the random-linear model coefficients.
const COEFFICIENT_STREAM: u64 = u64::MAX - 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    /// `a X1 + b X2^2 + c X1 X2` with i.i.d. inputs and a dummy `X3`.
    Polynomial { a: f64, b: f64, c: f64, law: InputLaw },
    /// Sobol' G function on `U[0,1]^d` with `a_i = sqrt(i - 1)`.
    SobolG { d: usize },
    /// `sin X1 + a sin^2 X2 + b X3^4 sin X1` on `U[-pi, pi]^3`.
    Ishigami { a: f64, b: f64 },
    /// Output drawn from `Gamma(alpha, alpha^-1/2)` (unit variance),
    /// independent of a single dummy `U[0,1]` input.
    GammaOutput { alpha: f64 },
    /// `sum_j c_j X_j` on `U[0,1]^d` with seeded heavy-tailed coefficients
    /// `c_j = z_j^3`, giving a wide spread of index magnitudes.
    RandomLinear { d: usize, coefficient_seed: u64 },
}

/// Model names accepted by [`ModelSpec::from_name`].
pub const MODEL_NAMES: &[&str] = &[
    "polynomial-uniform",
    "polynomial-normal",
    "polynomial-exponential",
    "polynomial-spike-slab",
    "sobol-g",
    "ishigami",
    "gamma-output",
    "random-linear",
];

impl ModelSpec {
    /// Polynomial on `U[0,1]` inputs with `[a, b, c] = [1, 1, 10]`.
    pub fn polynomial_uniform() -> Self {
        ModelSpec::Polynomial {
            a: 1.0,
            b: 1.0,
            c: 10.0,
            law: InputLaw::Uniform { lo: 0.0, hi: 1.0 },
        }
    }

    /// Polynomial on `N(0,1)` inputs with `[a, b, c] = [1, 1, 1]`.
    pub fn polynomial_normal() -> Self {
        ModelSpec::Polynomial {
            a: 1.0,
            b: 1.0,
            c: 1.0,
            law: InputLaw::Normal { mean: 0.0, std: 1.0 },
        }
    }

    /// Polynomial on `Exp(1)` inputs with `[a, b, c] = [1, 1, 10]`.
    pub fn polynomial_exponential() -> Self {
        ModelSpec::Polynomial {
            a: 1.0,
            b: 1.0,
            c: 10.0,
            law: InputLaw::Exponential { rate: 1.0 },
        }
    }

    /// Polynomial on spike-slab inputs (`p = 0.5`, slab `N(1, 1)`), `[1, 1, 1]`.
    pub fn polynomial_spike_slab() -> Self {
        ModelSpec::Polynomial {
            a: 1.0,
            b: 1.0,
            c: 1.0,
            law: InputLaw::SpikeSlab {
                p: 0.5,
                mean: 1.0,
                std: 1.0,
            },
        }
    }

    pub fn ishigami() -> Self {
        ModelSpec::Ishigami { a: 7.0, b: 0.1 }
    }

    /// Builds a model from its command-line name and optional parameters.
    ///
    /// | name | parameters (defaults) |
    /// |---|---|
    /// | `polynomial-uniform` | `a,b,c` (1,1,10) |
    /// | `polynomial-normal` | `a,b,c` (1,1,1) |
    /// | `polynomial-exponential` | `a,b,c` (1,1,10) |
    /// | `polynomial-spike-slab` | `a,b,c,p,mean,std` (1,1,1,0.5,1,1) |
    /// | `sobol-g` | `d` (1000) |
    /// | `ishigami` | `a,b` (7,0.1) |
    /// | `gamma-output` | `alpha` (0.1) |
    /// | `random-linear` | `d,coefficient_seed` (10000,0) |
    pub fn from_name(name: &str, params: &[f64]) -> Result<Self> {
        let with_defaults = |defaults: &[f64]| -> Result<Vec<f64>> {
            if params.len() > defaults.len() {
                return Err(Error::InvalidParameter(format!(
                    "model '{name}' takes at most {} parameters, got {}",
                    defaults.len(),
                    params.len()
                )));
            }
            let mut p = defaults.to_vec();
            p[..params.len()].copy_from_slice(params);
            Ok(p)
        };
        let count = |v: f64, what: &str| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 && v <= 1e9 {
                Ok(v as usize)
            } else {
                Err(Error::InvalidParameter(format!("{what} must be a positive integer, got {v}")))
            }
        };
        let poly = |p: Vec<f64>, law| ModelSpec::Polynomial {
            a: p[0],
            b: p[1],
            c: p[2],
            law,
        };
        let spec = match name {
            "polynomial-uniform" => poly(
                with_defaults(&[1.0, 1.0, 10.0])?,
                InputLaw::Uniform { lo: 0.0, hi: 1.0 },
            ),
            "polynomial-normal" => poly(
                with_defaults(&[1.0, 1.0, 1.0])?,
                InputLaw::Normal { mean: 0.0, std: 1.0 },
            ),
            "polynomial-exponential" => poly(
                with_defaults(&[1.0, 1.0, 10.0])?,
                InputLaw::Exponential { rate: 1.0 },
            ),
            "polynomial-spike-slab" => {
                let p = with_defaults(&[1.0, 1.0, 1.0, 0.5, 1.0, 1.0])?;
                let law = InputLaw::SpikeSlab {
                    p: p[3],
                    mean: p[4],
                    std: p[5],
                };
                poly(p, law)
            }
            "sobol-g" => ModelSpec::SobolG {
                d: count(with_defaults(&[1000.0])?[0], "dimension")?,
            },
            "ishigami" => {
                let p = with_defaults(&[7.0, 0.1])?;
                ModelSpec::Ishigami { a: p[0], b: p[1] }
            }
            "gamma-output" => ModelSpec::GammaOutput {
                alpha: with_defaults(&[0.1])?[0],
            },
            "random-linear" => {
                let p = with_defaults(&[10_000.0, 0.0])?;
                if !(p[1] >= 0.0 && p[1].fract() == 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "coefficient seed must be a nonnegative integer, got {}",
                        p[1]
                    )));
                }
                ModelSpec::RandomLinear {
                    d: count(p[0], "dimension")?,
                    coefficient_seed: p[1] as u64,
                }
            }
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown model '{other}' (expected one of {})",
                    MODEL_NAMES.join(", ")
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Polynomial { a, b, c, law } => {
                if ![a, b, c].iter().all(|v| v.is_finite()) {
                    return Err(Error::InvalidParameter("polynomial coefficients must be finite".into()));
                }
                law.validate()
            }
            ModelSpec::SobolG { d } | ModelSpec::RandomLinear { d, .. } if *d == 0 => {
                Err(Error::InvalidParameter("dimension must be at least 1".into()))
            }
            ModelSpec::Ishigami { a, b } if !(a.is_finite() && b.is_finite()) => {
                Err(Error::InvalidParameter("Ishigami coefficients must be finite".into()))
            }
            ModelSpec::GammaOutput { alpha } if !(alpha.is_finite() && *alpha > 0.0) => Err(
                Error::InvalidParameter(format!("gamma shape must be positive, got {alpha}")),
            ),
            _ => Ok(()),
        }
    }

    /// Short description used in result metadata.
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Polynomial { law, .. } => match law {
                InputLaw::Uniform { .. } => "polynomial-uniform",
                InputLaw::Normal { .. } => "polynomial-normal",
                InputLaw::Exponential { .. } => "polynomial-exponential",
                InputLaw::SpikeSlab { .. } => "polynomial-spike-slab",
                InputLaw::Gamma { .. } => "polynomial-gamma",
            },
            ModelSpec::SobolG { .. } => "sobol-g",
            ModelSpec::Ishigami { .. } => "ishigami",
            ModelSpec::GammaOutput { .. } => "gamma-output",
            ModelSpec::RandomLinear { .. } => "random-linear",
        }
    }

    /// Number of inputs.
    pub fn dim(&self) -> usize {
        match self {
            ModelSpec::Polynomial { .. } | ModelSpec::Ishigami { .. } => 3,
            ModelSpec::SobolG { d } | ModelSpec::RandomLinear { d, .. } => *d,
            ModelSpec::GammaOutput { .. } => 1,
        }
    }

    /// Law of input `j` (all models use i.i.d. inputs).
    pub fn input_law(&self, _j: usize) -> InputLaw {
        match self {
            ModelSpec::Polynomial { law, .. } => *law,
            ModelSpec::Ishigami { .. } => InputLaw::Uniform {
                lo: -std::f64::consts::PI,
                hi: std::f64::consts::PI,
            },
            ModelSpec::SobolG { .. }
            | ModelSpec::GammaOutput { .. }
            | ModelSpec::RandomLinear { .. } => InputLaw::Uniform { lo: 0.0, hi: 1.0 },
        }
    }

    /// Indices of inputs the model output does not depend on.
    pub fn dummy_inputs(&self) -> Vec<usize> {
        match self {
            ModelSpec::Polynomial { .. } => vec![2],
            ModelSpec::GammaOutput { .. } => vec![0],
            _ => vec![],
        }
    }

    /// Coefficients of the random-linear model (empty for other models).
    pub fn linear_coefficients(&self) -> Vec<f64> {
        match *self {
            ModelSpec::RandomLinear { d, coefficient_seed } => {
                let key = StreamKey::new(coefficient_seed, COEFFICIENT_STREAM);
                (0..d as u64)
                    .map(|j| key.cell(j).next_normal().powi(3))
                    .collect()
            }
            _ => Vec::new(),
        }
    }
}

/// Input samples with their outputs.
#[derive(Debug, Clone)]
pub struct Sample {
    /// `n x d`, stored column-major.
    pub x: Array2<f64>,
    pub y: Array1<f64>,
}

/// Input rows `start .. start + n` for `seed`. Row `r`, column `j` depends
/// only on `(seed, j, r)`, so any row range can be generated on its own.
pub fn generate_inputs(spec: &ModelSpec, start: u64, n: usize, seed: u64) -> Result<Array2<f64>> {
    spec.validate()?;
    let d = spec.dim();
    let mut x = Array2::<f64>::zeros((n, d).f());
    x.axis_iter_mut(Axis(1))
        .into_par_iter()
        .enumerate()
        .for_each(|(j, mut column)| {
            let law = spec.input_law(j);
            let key = StreamKey::new(seed, j as u64);
            for (r, v) in column.iter_mut().enumerate() {
                *v = law.sample(&mut key.cell(start + r as u64));
            }
        });
    Ok(x)
}

/// `n` i.i.d. input rows for `seed`.
pub fn sample_inputs(spec: &ModelSpec, n: usize, seed: u64) -> Result<Array2<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    generate_inputs(spec, 0, n, seed)
}

/// Rows `start .. start + n` of the sample stream for `seed`, with outputs.
pub fn generate(spec: &ModelSpec, start: u64, n: usize, seed: u64) -> Result<Sample> {
    let x = generate_inputs(spec, start, n, seed)?;
    let y = match *spec {
        ModelSpec::GammaOutput { alpha } => {
            let key = StreamKey::new(seed, OUTPUT_STREAM);
            let scale = alpha.powf(-0.5);
            Array1::from_shape_fn(n, |r| {
                scale * laws::sample_gamma(alpha, &mut key.cell(start + r as u64))
            })
        }
        _ => evaluate(spec, x.view())?,
    };
    Ok(Sample { x, y })
}

/// Pointwise model outputs for the rows of `x`.
///
/// The Gamma output model has no deterministic response; its outputs come
/// from [`generate`].
pub fn evaluate(spec: &ModelSpec, x: ArrayView2<f64>) -> Result<Array1<f64>> {
    spec.validate()?;
    if x.ncols() != spec.dim() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} input columns", spec.dim()),
            found: format!("{}", x.ncols()),
        });
    }
    let y = match *spec {
        ModelSpec::Polynomial { a, b, c, .. } => {
            let mut y = Array1::zeros(x.nrows());
            Zip::from(&mut y)
                .and(x.column(0))
                .and(x.column(1))
                .for_each(|y, &x1, &x2| *y = a * x1 + b * x2 * x2 + c * x1 * x2);
            y
        }
        ModelSpec::SobolG { .. } => {
            let mut y = Array1::ones(x.nrows());
            for (j, column) in x.axis_iter(Axis(1)).enumerate() {
                let a = (j as f64).sqrt();
                Zip::from(&mut y)
                    .and(column)
                    .for_each(|y, &v| *y *= ((4.0 * v - 2.0).abs() + a) / (1.0 + a));
            }
            y
        }
        ModelSpec::Ishigami { a, b } => {
            let mut y = Array1::zeros(x.nrows());
            Zip::from(&mut y)
                .and(x.column(0))
                .and(x.column(1))
                .and(x.column(2))
                .for_each(|y, &x1, &x2, &x3| {
                    let s2 = x2.sin();
                    *y = x1.sin() + a * s2 * s2 + b * x3.powi(4) * x1.sin();
                });
            y
        }
        ModelSpec::RandomLinear { .. } => {
            let mut y = Array1::zeros(x.nrows());
            for (c, column) in spec.linear_coefficients().into_iter().zip(x.axis_iter(Axis(1))) {
                Zip::from(&mut y).and(column).for_each(|y, &v| *y += c * v);
            }
            y
        }
        ModelSpec::GammaOutput { .. } => {
            return Err(Error::InvalidParameter(
                "the gamma-output model has a stochastic output; draw it with generate()".into(),
            ))
        }
    };
    Ok(y)
}
