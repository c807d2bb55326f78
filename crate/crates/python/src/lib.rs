//! Python bindings. Matrices are passed as sequences of rows (lists of
//! lists or 2-D numpy arrays), outputs as flat sequences.

use ndarray::{Array1, Array2};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use ::sobol_stream as core;
use core::{ModelSpec, PartitionConfig, Scheme};

fn value_error(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Array2<f64>> {
    let d = rows.first().map_or(0, Vec::len);
    if let Some(i) = rows.iter().position(|r| r.len() != d) {
        return Err(PyValueError::new_err(format!(
            "row {i} has {} columns, expected {d}",
            rows[i].len()
        )));
    }
    let n = rows.len();
    Array2::from_shape_vec((n, d), rows.concat()).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn config(scheme: &str, bins: usize, truncation: Option<(f64, f64)>) -> PyResult<PartitionConfig> {
    let scheme: Scheme = scheme.parse().map_err(value_error)?;
    let config = PartitionConfig::new(scheme, bins);
    Ok(match truncation {
        Some((lo, hi)) => config.with_truncation(lo, hi),
        None => config,
    })
}

fn model(name: &str, params: Option<Vec<f64>>) -> PyResult<ModelSpec> {
    ModelSpec::from_name(name, &params.unwrap_or_default()).map_err(value_error)
}

/// Finalized first-order index estimates.
#[pyclass(name = "SobolResult", frozen)]
struct PySobolResult(core::SobolResult);

#[pymethods]
impl PySobolResult {
    #[getter]
    fn s(&self) -> Vec<f64> {
        self.0.s.clone()
    }

    /// Weighted mean within-bin variance per input.
    #[getter]
    fn ev(&self) -> Vec<f64> {
        self.0.ev.clone()
    }

    #[getter]
    fn bin_counts(&self) -> Vec<Vec<u64>> {
        self.0.bin_counts.clone()
    }

    #[getter]
    fn total_variance(&self) -> f64 {
        self.0.total_variance
    }

    #[getter]
    fn n(&self) -> u64 {
        self.0.n
    }

    /// Effective bin count per input.
    #[getter]
    fn bins(&self) -> Vec<usize> {
        self.0.bins.clone()
    }

    #[getter]
    fn scheme(&self) -> &'static str {
        self.0.scheme.as_str()
    }

    fn __repr__(&self) -> String {
        format!("SobolResult(n={}, s={:?})", self.0.n, self.0.s)
    }
}

/// Streaming estimator state. Build with `initialize` or `from_json`.
#[pyclass(name = "SobolAccumulator")]
struct PySobolAccumulator(core::SobolAccumulator);

#[pymethods]
impl PySobolAccumulator {
    /// Freezes one partition per input from the initial samples, which are
    /// also ingested.
    #[staticmethod]
    #[pyo3(signature = (x, y, scheme = "quantile", bins = 50, truncation = None))]
    fn initialize(
        x: Vec<Vec<f64>>,
        y: Vec<f64>,
        scheme: &str,
        bins: usize,
        truncation: Option<(f64, f64)>,
    ) -> PyResult<Self> {
        let x = matrix(x)?;
        let y = Array1::from(y);
        let config = config(scheme, bins, truncation)?;
        core::SobolAccumulator::initialize(x.view(), y.view(), &config)
            .map(Self)
            .map_err(value_error)
    }

    #[staticmethod]
    fn from_json(json: &str) -> PyResult<Self> {
        core::SobolAccumulator::from_snapshot_json(json)
            .map(Self)
            .map_err(value_error)
    }

    fn to_json(&self) -> String {
        self.0.to_snapshot_json()
    }

    fn ingest(&mut self, py: Python<'_>, x: Vec<Vec<f64>>, y: Vec<f64>) -> PyResult<()> {
        let x = matrix(x)?;
        let y = Array1::from(y);
        py.detach(|| self.0.ingest_batch(x.view(), y.view()))
            .map_err(value_error)
    }

    /// Folds in another accumulator built on the same partitions.
    fn merge(&mut self, other: PyRef<'_, Self>) -> PyResult<()> {
        self.0.merge(&other.0).map_err(value_error)
    }

    fn finalize(&self) -> PyResult<PySobolResult> {
        self.0.finalize().map(PySobolResult).map_err(value_error)
    }

    /// Interior bin edges of input `i`.
    fn edges(&self, i: usize) -> PyResult<Vec<f64>> {
        self.0
            .partitions()
            .get(i)
            .map(|p| p.interior_edges().to_vec())
            .ok_or_else(|| PyValueError::new_err(format!("input {i} out of range")))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn n_seen(&self) -> u64 {
        self.0.n_seen()
    }

    #[getter]
    fn scheme(&self) -> &'static str {
        self.0.scheme().as_str()
    }

    #[getter]
    fn moment_cells(&self) -> usize {
        self.0.moment_cells()
    }
}

/// One-shot estimate: partitions are built from all of `x`.
#[pyfunction]
#[pyo3(signature = (x, y, scheme = "quantile", bins = 50, truncation = None))]
fn all_at_once(
    py: Python<'_>,
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    scheme: &str,
    bins: usize,
    truncation: Option<(f64, f64)>,
) -> PyResult<PySobolResult> {
    let x = matrix(x)?;
    let y = Array1::from(y);
    let config = config(scheme, bins, truncation)?;
    py.detach(|| core::all_at_once(x.view(), y.view(), &config))
        .map(PySobolResult)
        .map_err(value_error)
}

/// Returns `(sigma, threshold, n_negative)`.
#[pyfunction]
#[pyo3(signature = (indices, k = core::heuristic::DEFAULT_K))]
fn noise_sigma(indices: Vec<f64>, k: f64) -> PyResult<(f64, f64, usize)> {
    let t = core::noise_sigma(&indices, k).map_err(value_error)?;
    Ok((t.sigma, t.threshold, t.n_negative))
}

/// Returns `(significant, threshold, explained)` with `significant` a list
/// of `(index, value)` pairs, largest first.
#[pyfunction]
#[pyo3(signature = (indices, k = core::heuristic::DEFAULT_K))]
fn filter(indices: Vec<f64>, k: f64) -> PyResult<(Vec<(usize, f64)>, f64, f64)> {
    let f = core::filter(&indices, k).map_err(value_error)?;
    Ok((f.significant, f.threshold.threshold, f.explained))
}

/// Rows `start..start + n` of a reference model's sample stream.
#[pyfunction]
#[pyo3(signature = (name, n, seed = 0, params = None, start = 0))]
fn generate(
    py: Python<'_>,
    name: &str,
    n: usize,
    seed: u64,
    params: Option<Vec<f64>>,
    start: u64,
) -> PyResult<(Vec<Vec<f64>>, Vec<f64>)> {
    let spec = model(name, params)?;
    let sample = py
        .detach(|| core::models::generate(&spec, start, n, seed))
        .map_err(value_error)?;
    let rows = sample.x.rows().into_iter().map(|r| r.to_vec()).collect();
    Ok((rows, sample.y.to_vec()))
}

/// Closed-form `(variance, first_order)` of a reference model.
#[pyfunction]
#[pyo3(signature = (name, params = None))]
fn analytic_indices(name: &str, params: Option<Vec<f64>>) -> PyResult<(f64, Vec<f64>)> {
    let r = core::models::analytic_indices(&model(name, params)?).map_err(value_error)?;
    Ok((r.variance, r.first_order))
}

/// Brute-force `(variance, first_order)` from `samples` model draws.
#[pyfunction]
#[pyo3(signature = (name, samples, seed = 0, params = None))]
fn oracle_indices(
    py: Python<'_>,
    name: &str,
    samples: usize,
    seed: u64,
    params: Option<Vec<f64>>,
) -> PyResult<(f64, Vec<f64>)> {
    let spec = model(name, params)?;
    let r = py
        .detach(|| core::models::oracle_indices(&spec, samples, seed))
        .map_err(value_error)?;
    Ok((r.variance, r.first_order))
}

#[pymodule]
fn sobol_stream(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySobolAccumulator>()?;
    m.add_class::<PySobolResult>()?;
    m.add_function(wrap_pyfunction!(all_at_once, m)?)?;
    m.add_function(wrap_pyfunction!(noise_sigma, m)?)?;
    m.add_function(wrap_pyfunction!(filter, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_indices, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_indices, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
