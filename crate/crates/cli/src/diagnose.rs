use std::fs;
use std::path::Path;

use ndarray::s;
use rayon::prelude::*;
use serde::Serialize;
use sobol_stream::models::rng::derive_seed;
use sobol_stream::models::{analytic_indices, exact_bin_statistics, generate};
use sobol_stream::{ModelSpec, Partition, PartitionConfig, Scheme, SobolAccumulator};

use crate::analyze::{TOOL, VERSION};
use crate::error::{CliError, CliResult};
use crate::study::mean_std;

#[derive(Debug, Clone)]
pub struct DiagnoseSettings {
    pub model: ModelSpec,
    /// 0-based input index.
    pub input: usize,
    pub bins: usize,
    pub samples: u64,
    pub init_samples: usize,
    pub replicates: usize,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    pub truncation: Option<(f64, f64)>,
}

impl DiagnoseSettings {
    pub fn validate(&self) -> CliResult<()> {
        self.model.validate()?;
        if self.input >= self.model.dim() {
            return Err(CliError::Usage(format!(
                "--input-index {} out of range for a {}-input model",
                self.input,
                self.model.dim()
            )));
        }
        if self.bins < 2 || self.replicates < 1 || self.schemes.is_empty() {
            return Err(CliError::Usage("need --bins >= 2, --replicates >= 1 and a scheme".into()));
        }
        if self.init_samples < self.bins || self.samples < self.init_samples as u64 {
            return Err(CliError::Usage(format!(
                "need --bins ({}) <= --init-samples ({}) <= -n ({})",
                self.bins, self.init_samples, self.samples
            )));
        }
        Ok(())
    }
}

/// Replicate means of per-bin quantities for bin `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinRow {
    pub k: usize,
    /// Replicates whose partition had a bin `k`.
    pub replicates: usize,
    pub lower_mean: f64,
    pub upper_mean: f64,
    /// Sample variance of outputs in the bin, `s_k^2`.
    pub estimated_variance: f64,
    /// `E[V(f | X_i) | A_k]`.
    pub exact_mean_conditional_variance: f64,
    /// `V(E[f | X_i] | A_k)`, the per-bin approximation error.
    pub exact_conditional_mean_variance: f64,
    /// `n_k / N`.
    pub estimated_probability: f64,
    /// `P(A_k)`.
    pub exact_probability: f64,
    pub estimated_product: f64,
    pub exact_product: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeDiagnosis {
    pub scheme: Scheme,
    /// Replicate values of the aggregated numerator `sum_k s_k^2 n_k / N`.
    pub numerators: Vec<f64>,
    pub numerator_mean: f64,
    pub numerator_std: f64,
    /// `numerator_mean` minus the exact numerator.
    pub numerator_bias: f64,
    /// Replicate mean of `sum_k V(f | A_k) P(A_k)`, what the binned
    /// numerator converges to for each replicate's partition.
    pub partition_numerator_mean: f64,
    pub bins: Vec<BinRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnoseMeta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub model: ModelSpec,
    pub input_index: usize,
    pub bins: usize,
    pub n: u64,
    pub init_samples: usize,
    pub init_samples_ingested: bool,
    pub replicates: usize,
    pub seed: u64,
    pub truncation: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnoseArtifact {
    pub meta: DiagnoseMeta,
    /// `V(f) (1 - S_i)` from the closed forms.
    pub exact_numerator: f64,
    /// `E[V(f | X_i)]` by quadrature over a single unbounded bin.
    pub whole_domain_numerator: f64,
    pub schemes: Vec<SchemeDiagnosis>,
}

struct Replicate {
    partition: Partition,
    estimated_variance: Vec<f64>,
    estimated_probability: Vec<f64>,
}

fn replicate(settings: &DiagnoseSettings, scheme: Scheme, seed: u64) -> CliResult<Replicate> {
    let n = settings.samples as usize;
    let sample = generate(&settings.model, 0, n, seed)?;
    let x = sample.x.slice(s![.., settings.input..settings.input + 1]);
    let n0 = settings.init_samples;
    let mut config = PartitionConfig::new(scheme, settings.bins);
    if let Some((lo, hi)) = settings.truncation {
        config = config.with_truncation(lo, hi);
    }
    let mut acc = SobolAccumulator::initialize(x.slice(s![..n0, ..]), sample.y.slice(s![..n0]), &config)?;
    acc.ingest_batch(x.slice(s![n0.., ..]), sample.y.slice(s![n0..]))?;
    let cells = acc.cells(0);
    Ok(Replicate {
        partition: acc.partitions()[0].clone(),
        estimated_variance: cells.iter().map(|c| c.sample_variance()).collect(),
        estimated_probability: cells.iter().map(|c| c.n as f64 / n as f64).collect(),
    })
}

fn diagnose_scheme(settings: &DiagnoseSettings, scheme: Scheme, exact_numerator: f64) -> CliResult<SchemeDiagnosis> {
    let reps = (0..settings.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let rep = replicate(settings, scheme, derive_seed(settings.seed, r))?;
            let exact = exact_bin_statistics(&settings.model, settings.input, &rep.partition)?;
            Ok((rep, exact))
        })
        .collect::<CliResult<Vec<_>>>()?;

    let numerators: Vec<f64> = reps
        .iter()
        .map(|(rep, _)| rep.estimated_variance.iter().zip(&rep.estimated_probability).map(|(v, p)| v * p).sum())
        .collect();
    let partition_numerators: Vec<f64> = reps
        .iter()
        .map(|(_, exact)| {
            exact
                .iter()
                .filter(|b| b.probability > 0.0)
                .map(|b| b.within_bin_variance() * b.probability)
                .sum()
        })
        .collect();
    let (numerator_mean, numerator_std) = mean_std(&numerators);

    let max_bins = reps.iter().map(|(rep, _)| rep.partition.m_effective()).max().unwrap_or(0);
    let bins = (0..max_bins)
        .map(|k| {
            let rows: Vec<_> = reps
                .iter()
                .filter(|(rep, _)| k < rep.partition.m_effective())
                .map(|(rep, exact)| (rep.estimated_variance[k], rep.estimated_probability[k], exact[k]))
                .collect();
            let m = rows.len() as f64;
            let avg = |f: &dyn Fn(&(f64, f64, sobol_stream::models::ExactBinStat)) -> f64| {
                rows.iter().map(f).sum::<f64>() / m
            };
            BinRow {
                k,
                replicates: rows.len(),
                lower_mean: avg(&|r| r.2.lower),
                upper_mean: avg(&|r| r.2.upper),
                estimated_variance: avg(&|r| r.0),
                exact_mean_conditional_variance: avg(&|r| r.2.mean_conditional_variance),
                exact_conditional_mean_variance: avg(&|r| r.2.conditional_mean_variance),
                estimated_probability: avg(&|r| r.1),
                exact_probability: avg(&|r| r.2.probability),
                estimated_product: avg(&|r| r.0 * r.1),
                exact_product: avg(&|r| r.2.mean_conditional_variance * r.2.probability),
            }
        })
        .collect();

    Ok(SchemeDiagnosis {
        scheme,
        numerator_mean,
        numerator_std,
        numerator_bias: numerator_mean - exact_numerator,
        partition_numerator_mean: partition_numerators.iter().sum::<f64>() / partition_numerators.len() as f64,
        numerators,
        bins,
    })
}

/// Per-bin comparison of the estimator's ingredients with their exact
/// values for each partition scheme.
pub fn run_diagnose(settings: &DiagnoseSettings) -> CliResult<DiagnoseArtifact> {
    settings.validate()?;
    let reference = analytic_indices(&settings.model)?;
    let exact_numerator = reference.variance * (1.0 - reference.first_order[settings.input]);
    let whole = Partition::from_edges(Vec::new(), Scheme::Equidistant)?;
    let whole_domain_numerator = exact_bin_statistics(&settings.model, settings.input, &whole)?[0].mean_conditional_variance;
    let schemes = settings
        .schemes
        .iter()
        .map(|&scheme| diagnose_scheme(settings, scheme, exact_numerator))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(DiagnoseArtifact {
        meta: DiagnoseMeta {
            tool: TOOL,
            version: VERSION,
            command: "diagnose",
            model: settings.model,
            input_index: settings.input,
            bins: settings.bins,
            n: settings.samples,
            init_samples: settings.init_samples,
            init_samples_ingested: true,
            replicates: settings.replicates,
            seed: settings.seed,
            truncation: settings.truncation,
        },
        exact_numerator,
        whole_domain_numerator,
        schemes,
    })
}

/// Writes `diagnose_bins.csv` with one row per scheme and bin.
pub fn write_plot_data(diagnosis: &DiagnoseArtifact, dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join("diagnose_bins.csv");
    let fail = |e: csv::Error| CliError::io(&path, std::io::Error::other(e));
    let mut w = csv::Writer::from_path(&path).map_err(fail)?;
    w.write_record([
        "scheme",
        "k",
        "lower_mean",
        "upper_mean",
        "estimated_variance",
        "exact_mean_conditional_variance",
        "exact_conditional_mean_variance",
        "estimated_probability",
        "exact_probability",
        "estimated_product",
        "exact_product",
    ])
    .map_err(fail)?;
    for scheme in &diagnosis.schemes {
        for b in &scheme.bins {
            let mut row = vec![scheme.scheme.as_str().to_string(), b.k.to_string()];
            row.extend(
                [
                    b.lower_mean,
                    b.upper_mean,
                    b.estimated_variance,
                    b.exact_mean_conditional_variance,
                    b.exact_conditional_mean_variance,
                    b.estimated_probability,
                    b.exact_probability,
                    b.estimated_product,
                    b.exact_product,
                ]
                .iter()
                .map(|v| format!("{v:?}")),
            );
            w.write_record(&row).map_err(fail)?;
        }
    }
    w.flush().map_err(|e| CliError::io(&path, e))
}
