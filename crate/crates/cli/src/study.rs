use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sobol_stream::heuristic::SIGMA_CONVENTION;
use sobol_stream::models::rng::derive_seed;
use sobol_stream::models::{analytic_indices, oracle_indices};
use sobol_stream::partition::quantile_def4;
use sobol_stream::{noise_sigma, Error, ModelSpec, Scheme};

use crate::analyze::{stream_analysis, AnalysisSettings, TOOL, VERSION};
use crate::artifact::write_text;
use crate::error::{CliError, CliResult};
use crate::source::ModelSource;

#[derive(Debug, Clone)]
pub struct StudySettings {
    pub model: ModelSpec,
    pub schemes: Vec<Scheme>,
    pub sample_sizes: Vec<u64>,
    pub replicates: usize,
    pub seed: u64,
    /// Per-run settings; `scheme` is overridden by `schemes`.
    pub analysis: AnalysisSettings,
    /// Oracle sample count for models without closed forms; 0 disables.
    pub oracle_samples: usize,
    pub oracle_cache: Option<PathBuf>,
}

impl StudySettings {
    pub fn validate(&self) -> CliResult<()> {
        self.analysis.validate()?;
        self.model.validate()?;
        if self.replicates < 2 {
            return Err(CliError::Usage(format!("--replicates must be at least 2, got {}", self.replicates)));
        }
        if self.schemes.is_empty() || self.sample_sizes.is_empty() {
            return Err(CliError::Usage("need at least one scheme and one sample size".into()));
        }
        if let Some(&n) = self.sample_sizes.iter().find(|&&n| n < 2) {
            return Err(CliError::Usage(format!("sample sizes must be at least 2, got {n}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    /// `analytic` or `oracle`.
    pub kind: String,
    pub variance: f64,
    pub first_order: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct OracleCache {
    model: ModelSpec,
    samples: usize,
    seed: u64,
    reference: Reference,
}

fn oracle_seed(seed: u64) -> u64 {
    derive_seed(seed, u64::MAX)
}

/// Closed-form indices when available, otherwise the brute-force oracle
/// (read from or written to `cache`) when `oracle_samples > 0`.
pub fn reference_values(
    model: &ModelSpec,
    oracle_samples: usize,
    cache: Option<&Path>,
    seed: u64,
) -> CliResult<Option<Reference>> {
    match analytic_indices(model) {
        Ok(r) => {
            return Ok(Some(Reference {
                kind: "analytic".into(),
                variance: r.variance,
                first_order: r.first_order,
                oracle_samples: None,
            }))
        }
        Err(Error::NoClosedForm(_)) if oracle_samples > 0 => {}
        Err(Error::NoClosedForm(_)) => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    let seed = oracle_seed(seed);
    if let Some(path) = cache {
        if let Ok(text) = fs::read_to_string(path) {
            if let Ok(hit) = serde_json::from_str::<OracleCache>(&text) {
                if hit.model == *model && hit.samples == oracle_samples && hit.seed == seed {
                    return Ok(Some(hit.reference));
                }
            }
        }
    }
    let r = oracle_indices(model, oracle_samples, seed)?;
    let reference = Reference {
        kind: "oracle".into(),
        variance: r.variance,
        first_order: r.first_order,
        oracle_samples: Some(oracle_samples),
    };
    if let Some(path) = cache {
        let entry = OracleCache {
            model: *model,
            samples: oracle_samples,
            seed,
            reference: reference.clone(),
        };
        let text = serde_json::to_string_pretty(&entry).map_err(|e| CliError::Artifact(e.to_string()))?;
        write_text(path, &text)?;
    }
    Ok(Some(reference))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distribution {
    pub index: usize,
    pub mean: f64,
    pub std: f64,
    pub p5: f64,
    pub p95: f64,
    pub reference: Option<f64>,
    pub values: Vec<f64>,
}

impl Distribution {
    fn of(index: usize, values: Vec<f64>, reference: Option<f64>) -> Self {
        let (mean, std) = mean_std(&values);
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        Distribution {
            index,
            mean,
            std,
            p5: quantile_def4(&sorted, 0.05),
            p95: quantile_def4(&sorted, 0.95),
            reference,
            values,
        }
    }
}

/// Sample mean and standard deviation (divisor `n - 1`).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRun {
    pub scheme: Scheme,
    pub n: u64,
    pub per_input: Vec<Distribution>,
    /// Per replicate; `None` where no index was negative.
    pub sigma_symm: Vec<Option<f64>>,
    pub sigma_symm_mean: Option<f64>,
    pub m_effective_min: usize,
    pub rmse: Option<f64>,
    pub max_abs_bias: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub scheme: Scheme,
    pub n: u64,
    pub sigma_symm_mean: Option<f64>,
    pub rmse: Option<f64>,
    pub max_abs_bias: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaSlope {
    pub scheme: Scheme,
    /// Least-squares slope of `ln sigma_symm` against `ln N`.
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyMeta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub model: ModelSpec,
    pub schemes: Vec<Scheme>,
    pub bins: usize,
    pub init_samples: usize,
    pub init_samples_ingested: bool,
    pub batch_size: usize,
    pub sample_sizes: Vec<u64>,
    pub replicates: usize,
    pub seed: u64,
    pub truncation: Option<(f64, f64)>,
    pub sigma_convention: &'static str,
    pub filter_k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyArtifact {
    pub meta: StudyMeta,
    pub reference: Option<Reference>,
    pub runs: Vec<StudyRun>,
    pub convergence: Vec<ConvergenceRow>,
    pub sigma_slopes: Vec<SigmaSlope>,
    /// Filled by [`run_study`]; clear it for byte-reproducible output.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<crate::analyze::Timing>,
}

struct Replicate {
    s: Vec<f64>,
    m_effective_min: usize,
}

fn replicate(settings: &AnalysisSettings, model: &ModelSpec, n: u64, seed: u64) -> CliResult<Replicate> {
    let mut source = ModelSource::new(*model, n, seed);
    let outcome = stream_analysis(settings, &mut source, None)?;
    Ok(Replicate {
        m_effective_min: outcome.result.bins.iter().copied().min().unwrap_or(0),
        s: outcome.result.s,
    })
}

/// Runs every (scheme, N) combination over `replicates` seeded replicates.
/// Replicate `r` uses `derive_seed(seed, r)` for every scheme and size, so
/// schemes are compared on identical data.
pub fn run_study(settings: &StudySettings) -> CliResult<StudyArtifact> {
    settings.validate()?;
    let started = std::time::Instant::now();
    let reference = reference_values(
        &settings.model,
        settings.oracle_samples,
        settings.oracle_cache.as_deref(),
        settings.seed,
    )?;
    let d = settings.model.dim();
    let mut runs = Vec::new();
    for &scheme in &settings.schemes {
        for &n in &settings.sample_sizes {
            let analysis = AnalysisSettings {
                scheme,
                init_samples: settings.analysis.init_samples.min(n as usize).max(settings.analysis.bins),
                ..settings.analysis.clone()
            };
            let reps = (0..settings.replicates as u64)
                .into_par_iter()
                .map(|r| replicate(&analysis, &settings.model, n, derive_seed(settings.seed, r)))
                .collect::<CliResult<Vec<_>>>()?;
            runs.push(summarize(scheme, n, d, &reps, reference.as_ref(), settings.analysis.filter_k));
        }
    }
    let convergence = runs
        .iter()
        .map(|r| ConvergenceRow {
            scheme: r.scheme,
            n: r.n,
            sigma_symm_mean: r.sigma_symm_mean,
            rmse: r.rmse,
            max_abs_bias: r.max_abs_bias,
        })
        .collect();
    let sigma_slopes = settings
        .schemes
        .iter()
        .filter_map(|&scheme| {
            let points: Vec<(f64, f64)> = runs
                .iter()
                .filter(|r| r.scheme == scheme)
                .filter_map(|r| r.sigma_symm_mean.map(|s| ((r.n as f64).ln(), s.ln())))
                .collect();
            log_slope(&points).map(|slope| SigmaSlope { scheme, slope })
        })
        .collect();
    let meta = StudyMeta {
        tool: TOOL,
        version: VERSION,
        command: "study",
        model: settings.model,
        schemes: settings.schemes.clone(),
        bins: settings.analysis.bins,
        init_samples: settings.analysis.init_samples,
        init_samples_ingested: true,
        batch_size: settings.analysis.batch_size,
        sample_sizes: settings.sample_sizes.clone(),
        replicates: settings.replicates,
        seed: settings.seed,
        truncation: settings.analysis.truncation,
        sigma_convention: SIGMA_CONVENTION,
        filter_k: settings.analysis.filter_k,
    };
    let rows: u64 = settings.sample_sizes.iter().sum::<u64>() * (settings.replicates * settings.schemes.len()) as u64;
    let seconds = started.elapsed().as_secs_f64();
    Ok(StudyArtifact {
        meta,
        reference,
        runs,
        convergence,
        sigma_slopes,
        timing: Some(crate::analyze::Timing {
            seconds,
            rows_per_second: rows as f64 / seconds.max(1e-12),
        }),
    })
}

fn summarize(scheme: Scheme, n: u64, d: usize, reps: &[Replicate], reference: Option<&Reference>, k: f64) -> StudyRun {
    let per_input: Vec<Distribution> = (0..d)
        .map(|i| {
            let values = reps.iter().map(|r| r.s[i]).collect();
            Distribution::of(i, values, reference.map(|r| r.first_order[i]))
        })
        .collect();
    let sigma_symm: Vec<Option<f64>> = reps.iter().map(|r| noise_sigma(&r.s, k).ok().map(|t| t.sigma)).collect();
    let present: Vec<f64> = sigma_symm.iter().flatten().copied().collect();
    let sigma_symm_mean = (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64);
    let (rmse, max_abs_bias) = match reference {
        Some(reference) => {
            let sq: f64 = reps
                .iter()
                .flat_map(|r| r.s.iter().zip(&reference.first_order).map(|(s, t)| (s - t).powi(2)))
                .sum();
            let rmse = (sq / (reps.len() * d) as f64).sqrt();
            let bias = per_input
                .iter()
                .map(|p| (p.mean - p.reference.unwrap_or(p.mean)).abs())
                .fold(0.0, f64::max);
            (Some(rmse), Some(bias))
        }
        None => (None, None),
    };
    StudyRun {
        scheme,
        n,
        per_input,
        sigma_symm,
        sigma_symm_mean,
        m_effective_min: reps.iter().map(|r| r.m_effective_min).min().unwrap_or(0),
        rmse,
        max_abs_bias,
    }
}

/// Least-squares slope through `(x, y)` points; needs two distinct `x`.
pub fn log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError::io(path, std::io::Error::other(e))
}

/// Writes `replicates.csv` (one row per replicate index value) and
/// `convergence.csv` into `dir`.
pub fn write_plot_data(study: &StudyArtifact, dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join("replicates.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
    w.write_record(["scheme", "n", "replicate", "input", "s", "reference"])
        .map_err(|e| csv_error(&path, e))?;
    for run in &study.runs {
        for dist in &run.per_input {
            for (r, s) in dist.values.iter().enumerate() {
                let reference = dist.reference.map(|v| format!("{v:?}")).unwrap_or_default();
                w.write_record([
                    run.scheme.as_str().to_string(),
                    run.n.to_string(),
                    r.to_string(),
                    dist.index.to_string(),
                    format!("{s:?}"),
                    reference,
                ])
                .map_err(|e| csv_error(&path, e))?;
            }
        }
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;

    let path = dir.join("convergence.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
    w.write_record(["scheme", "n", "sigma_symm_mean", "rmse", "max_abs_bias"])
        .map_err(|e| csv_error(&path, e))?;
    let opt = |v: Option<f64>| v.map(|v| format!("{v:?}")).unwrap_or_default();
    for row in &study.convergence {
        w.write_record([
            row.scheme.as_str().to_string(),
            row.n.to_string(),
            opt(row.sigma_symm_mean),
            opt(row.rmse),
            opt(row.max_abs_bias),
        ])
        .map_err(|e| csv_error(&path, e))?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))
}
