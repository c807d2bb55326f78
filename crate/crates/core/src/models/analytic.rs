use serde::{Deserialize, Serialize};

use super::{InputLaw, ModelSpec};
use crate::error::{Error, Result};

/// Output variance and first-order indices of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceIndices {
    pub variance: f64,
    pub first_order: Vec<f64>,
}

/// Closed-form variance and first-order indices.
///
/// Polynomial models are supported for the tabulated input laws `U[0,1]`,
/// `N(0,1)` and `Exp(1)`. Spike-slab inputs have no closed form and must use
/// [`super::oracle_indices`].
pub fn analytic_indices(spec: &ModelSpec) -> Result<ReferenceIndices> {
    spec.validate()?;
    let (variance, partial) = match *spec {
        ModelSpec::Polynomial { a, b, c, law } => {
            let (v, v1, v2) = match law {
                InputLaw::Uniform { lo, hi } if lo == 0.0 && hi == 1.0 => (
                    a * a / 12.0 + a * c / 12.0 + 4.0 * b * b / 45.0 + b * c / 12.0
                        + 7.0 * c * c / 144.0,
                    a * a / 12.0 + a * c / 12.0 + c * c / 48.0,
                    4.0 * b * b / 45.0 + b * c / 12.0 + c * c / 48.0,
                ),
                InputLaw::Normal { mean, std } if mean == 0.0 && std == 1.0 => {
                    (a * a + 2.0 * b * b + c * c, a * a, 2.0 * b * b)
                }
                InputLaw::Exponential { rate } if rate == 1.0 => (
                    a * a + 2.0 * a * c + 20.0 * b * b + 8.0 * b * c + 3.0 * c * c,
                    a * a + 2.0 * a * c + c * c,
                    20.0 * b * b + 8.0 * b * c + c * c,
                ),
                other => {
                    return Err(Error::NoClosedForm(format!(
                        "polynomial with {other:?} inputs; use oracle_indices"
                    )))
                }
            };
            (v, vec![v1, v2, 0.0])
        }
        ModelSpec::SobolG { d } => {
            let partial: Vec<f64> = (0..d)
                .map(|j| {
                    let a = (j as f64).sqrt();
                    (1.0 / 3.0) / ((1.0 + a) * (1.0 + a))
                })
                .collect();
            let v = partial.iter().map(|vi| 1.0 + vi).product::<f64>() - 1.0;
            (v, partial)
        }
        ModelSpec::Ishigami { a, b } => {
            let pi4 = std::f64::consts::PI.powi(4);
            let v = a * a / 8.0 + b * pi4 / 5.0 + b * b * pi4 * pi4 / 18.0 + 0.5;
            let v1 = 0.5 * (1.0 + b * pi4 / 5.0).powi(2);
            (v, vec![v1, a * a / 8.0, 0.0])
        }
        ModelSpec::GammaOutput { .. } => (1.0, vec![0.0]),
        ModelSpec::RandomLinear { .. } => {
            let partial: Vec<f64> = spec
                .linear_coefficients()
                .iter()
                .map(|c| c * c / 12.0)
                .collect();
            (partial.iter().sum(), partial)
        }
    };
    Ok(ReferenceIndices {
        variance,
        first_order: partial.iter().map(|vi| vi / variance).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_table_rows() {
        let r = analytic_indices(&ModelSpec::polynomial_normal()).unwrap();
        assert_eq!(r.variance, 4.0);
        assert_eq!(r.first_order, vec![0.25, 0.5, 0.0]);

        let r = analytic_indices(&ModelSpec::polynomial_uniform()).unwrap();
        assert_relative_eq!(r.variance, 6.7, max_relative = 1e-14);
        assert_relative_eq!(r.first_order[0], 3.0 / 6.7, max_relative = 1e-14);
        assert_relative_eq!(r.first_order[1], 0.44859, epsilon = 5e-6);
        assert_eq!(r.first_order[2], 0.0);

        let r = analytic_indices(&ModelSpec::polynomial_exponential()).unwrap();
        assert_eq!(r.variance, 421.0);
        assert_relative_eq!(r.first_order[0], 121.0 / 421.0, max_relative = 1e-15);
        assert_relative_eq!(r.first_order[1], 200.0 / 421.0, max_relative = 1e-15);
    }

    #[test]
    fn sobol_g_three_inputs() {
        let r = analytic_indices(&ModelSpec::SobolG { d: 3 }).unwrap();
        assert_relative_eq!(r.variance, 0.52705, epsilon = 5e-6);
        // V_j = 1 / (3 (1 + sqrt(j))^2)
        let v = [1.0 / 3.0, 1.0 / 12.0, 1.0 / (3.0 * (1.0 + 2f64.sqrt()).powi(2))];
        let total = (1.0 + v[0]) * (1.0 + v[1]) * (1.0 + v[2]) - 1.0;
        for j in 0..3 {
            assert_relative_eq!(r.first_order[j], v[j] / total, max_relative = 1e-13);
        }
        assert_relative_eq!(r.first_order[0], 0.63245, epsilon = 5e-5);
    }

    #[test]
    fn ishigami_standard_values() {
        let r = analytic_indices(&ModelSpec::ishigami()).unwrap();
        assert_relative_eq!(r.first_order[0], 0.3139, epsilon = 5e-5);
        assert_relative_eq!(r.first_order[1], 0.4424, epsilon = 5e-5);
        assert_eq!(r.first_order[2], 0.0);
    }

    #[test]
    fn spike_slab_has_no_closed_form() {
        assert!(matches!(
            analytic_indices(&ModelSpec::polynomial_spike_slab()),
            Err(Error::NoClosedForm(_))
        ));
    }

    #[test]
    fn random_linear_indices_sum_to_one() {
        let r = analytic_indices(&ModelSpec::RandomLinear {
            d: 50,
            coefficient_seed: 3,
        })
        .unwrap();
        assert_relative_eq!(r.first_order.iter().sum::<f64>(), 1.0, max_relative = 1e-12);
    }
}
