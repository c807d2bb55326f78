use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;
use sobol_stream::heuristic::SIGMA_CONVENTION;
use sobol_stream::{
    filter, Error, NoiseThreshold, PartitionConfig, Scheme, SobolAccumulator, SobolResult,
};

use crate::error::{CliError, CliResult};
use crate::source::{read_rows, BatchSource, SourceSpec};

pub const DEFAULT_BATCH_SIZE: usize = 10_000;
pub const DEFAULT_BINS: usize = 50;
/// Initial samples per target bin when `init_samples` is not given.
pub const DEFAULT_INIT_PER_BIN: usize = 100;

/// Knobs shared by `analyze`, `study` and `diagnose`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSettings {
    pub scheme: Scheme,
    pub bins: usize,
    pub batch_size: usize,
    /// Rows used to build the partitions. They are also ingested.
    pub init_samples: usize,
    pub truncation: Option<(f64, f64)>,
    /// Finalize every this many rows; 0 disables snapshots.
    pub snapshot_every: u64,
    pub filter_k: f64,
    pub full_bin_counts: bool,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        AnalysisSettings {
            scheme: Scheme::Quantile,
            bins: DEFAULT_BINS,
            batch_size: DEFAULT_BATCH_SIZE,
            init_samples: DEFAULT_INIT_PER_BIN * DEFAULT_BINS,
            truncation: None,
            snapshot_every: 0,
            filter_k: sobol_stream::heuristic::DEFAULT_K,
            full_bin_counts: false,
        }
    }
}

impl AnalysisSettings {
    pub fn validate(&self) -> CliResult<()> {
        if self.bins < 2 {
            return Err(CliError::Usage(format!("--bins must be at least 2, got {}", self.bins)));
        }
        if self.batch_size == 0 {
            return Err(CliError::Usage("--batch-size must be at least 1".into()));
        }
        if self.init_samples < self.bins {
            return Err(CliError::Usage(format!(
                "--init-samples ({}) must be at least --bins ({})",
                self.init_samples, self.bins
            )));
        }
        if !(self.filter_k.is_finite() && self.filter_k >= 0.0) {
            return Err(CliError::Usage(format!("--filter-k must be nonnegative, got {}", self.filter_k)));
        }
        Ok(())
    }

    pub fn partition_config(&self) -> PartitionConfig {
        let config = PartitionConfig::new(self.scheme, self.bins);
        match self.truncation {
            Some((lo, hi)) => config.with_truncation(lo, hi),
            None => config,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdRecord {
    pub sigma: f64,
    pub k: f64,
    pub value: f64,
    pub n_negative: usize,
}

impl From<NoiseThreshold> for ThresholdRecord {
    fn from(t: NoiseThreshold) -> Self {
        ThresholdRecord {
            sigma: t.sigma,
            k: t.k,
            value: t.threshold,
            n_negative: t.n_negative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignificantRecord {
    pub index: usize,
    pub s: f64,
}

/// Outcome of the noise heuristic on one set of indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Screened {
    pub threshold: Option<ThresholdRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_unavailable: Option<String>,
    pub significant: Vec<SignificantRecord>,
    pub explained_variance: f64,
}

pub fn screen(indices: &[f64], k: f64) -> CliResult<Screened> {
    match filter(indices, k) {
        Ok(s) => Ok(Screened {
            threshold: Some(s.threshold.into()),
            threshold_unavailable: None,
            significant: s
                .significant
                .into_iter()
                .map(|(index, s)| SignificantRecord { index, s })
                .collect(),
            explained_variance: s.explained,
        }),
        Err(Error::NoNegativeIndices) => Ok(Screened {
            threshold: None,
            threshold_unavailable: Some(Error::NoNegativeIndices.to_string()),
            significant: Vec::new(),
            explained_variance: 0.0,
        }),
        Err(e) => Err(e.into()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapshotRecord {
    pub n: u64,
    pub total_variance: f64,
    pub s: Vec<f64>,
    pub threshold: Option<ThresholdRecord>,
}

/// Everything a streamed analysis produced.
#[derive(Debug, Clone)]
pub struct StreamOutcome {
    pub accumulator: SobolAccumulator,
    pub result: SobolResult,
    pub snapshots: Vec<SnapshotRecord>,
    /// Rows that defined the partitions (0 when resumed).
    pub init_rows: usize,
    pub ingest_seconds: f64,
}

fn snapshot(acc: &SobolAccumulator, k: f64) -> CliResult<SnapshotRecord> {
    let r = acc.finalize()?;
    let threshold = sobol_stream::noise_sigma(&r.s, k).ok().map(Into::into);
    Ok(SnapshotRecord {
        n: r.n,
        total_variance: r.total_variance,
        s: r.s,
        threshold,
    })
}

/// Builds partitions from the first `init_samples` rows (or continues
/// `resume`), ingests the remaining stream in `batch_size` rows and
/// finalizes at every snapshot boundary and at the end.
pub fn stream_analysis(
    settings: &AnalysisSettings,
    source: &mut dyn BatchSource,
    resume: Option<SobolAccumulator>,
) -> CliResult<StreamOutcome> {
    settings.validate()?;
    let started = Instant::now();
    let (mut acc, init_rows) = match resume {
        Some(acc) => {
            if acc.dim() != source.dim() {
                return Err(CliError::Data(Error::ShapeMismatch {
                    expected: format!("{} inputs (saved state)", acc.dim()),
                    found: format!("{} inputs", source.dim()),
                }));
            }
            (acc, 0)
        }
        None => {
            let (x, y) = read_rows(source, settings.init_samples)?
                .ok_or(CliError::Estimation(Error::InsufficientData(0)))?;
            let acc = SobolAccumulator::initialize(x.view(), y.view(), &settings.partition_config())?;
            (acc, y.len())
        }
    };

    let every = settings.snapshot_every;
    let mut snapshots = Vec::new();
    let mut next_boundary = if every > 0 { acc.n_seen().div_ceil(every).max(1) * every } else { u64::MAX };
    loop {
        if acc.n_seen() == next_boundary {
            snapshots.push(snapshot(&acc, settings.filter_k)?);
            next_boundary += every;
        }
        let want = (settings.batch_size as u64).min(next_boundary - acc.n_seen()) as usize;
        match source.next_batch(want)? {
            Some((x, y)) => acc.ingest_batch(x.view(), y.view())?,
            None => break,
        }
    }
    let result = acc.finalize()?;
    Ok(StreamOutcome {
        accumulator: acc,
        result,
        snapshots,
        init_rows,
        ingest_seconds: started.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinCountSummary {
    pub min: u64,
    pub max: u64,
    pub mean: f64,
    pub empty: usize,
    /// Bins with one sample, which contribute zero variance.
    pub singleton: usize,
}

impl BinCountSummary {
    pub fn of(counts: &[u64]) -> Self {
        BinCountSummary {
            min: counts.iter().copied().min().unwrap_or(0),
            max: counts.iter().copied().max().unwrap_or(0),
            mean: counts.iter().sum::<u64>() as f64 / counts.len().max(1) as f64,
            empty: counts.iter().filter(|&&c| c == 0).count(),
            singleton: counts.iter().filter(|&&c| c == 1).count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputRecord {
    pub index: usize,
    pub s: f64,
    pub ev: f64,
    pub m_effective: usize,
    pub bin_counts_summary: BinCountSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bin_counts: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultMeta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub scheme: Scheme,
    pub bins: usize,
    pub m_effective: Vec<usize>,
    pub collapsed_edges: Vec<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub partition_warnings: Vec<String>,
    pub init_samples: usize,
    pub init_samples_ingested: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resumed_from: Option<PathBuf>,
    pub n: u64,
    pub batch_size: usize,
    pub seed: Option<u64>,
    pub source: SourceSpec,
    pub truncation: Option<(f64, f64)>,
    pub snapshot_every: u64,
    pub sigma_convention: &'static str,
    pub filter_k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub seconds: f64,
    pub rows_per_second: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultArtifact {
    pub meta: ResultMeta,
    pub total_variance: f64,
    pub per_input: Vec<InputRecord>,
    #[serde(flatten)]
    pub screened: Screened,
    pub snapshots: Vec<SnapshotRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

pub const TOOL: &str = "sobol-stream";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

impl ResultArtifact {
    pub fn build(
        settings: &AnalysisSettings,
        outcome: &StreamOutcome,
        source: SourceSpec,
        seed: Option<u64>,
        resumed_from: Option<PathBuf>,
        with_timing: bool,
    ) -> CliResult<Self> {
        let r = &outcome.result;
        let partitions = outcome.accumulator.partitions();
        let meta = ResultMeta {
            tool: TOOL,
            version: VERSION,
            command: "analyze",
            scheme: outcome.accumulator.scheme(),
            bins: settings.bins,
            m_effective: r.bins.clone(),
            collapsed_edges: partitions.iter().map(|p| p.collapsed_edges()).collect(),
            partition_warnings: partitions
                .iter()
                .enumerate()
                .filter_map(|(i, p)| p.warning().map(|w| format!("input {i}: {w}")))
                .collect(),
            init_samples: outcome.init_rows,
            init_samples_ingested: true,
            resumed_from,
            n: r.n,
            batch_size: settings.batch_size,
            seed,
            source,
            truncation: settings.truncation,
            snapshot_every: settings.snapshot_every,
            sigma_convention: SIGMA_CONVENTION,
            filter_k: settings.filter_k,
        };
        let per_input = (0..r.dim())
            .map(|i| InputRecord {
                index: i,
                s: r.s[i],
                ev: r.ev[i],
                m_effective: r.bins[i],
                bin_counts_summary: BinCountSummary::of(&r.bin_counts[i]),
                bin_counts: settings.full_bin_counts.then(|| r.bin_counts[i].clone()),
            })
            .collect();
        Ok(ResultArtifact {
            meta,
            total_variance: r.total_variance,
            per_input,
            screened: screen(&r.s, settings.filter_k)?,
            snapshots: outcome.snapshots.clone(),
            timing: with_timing.then(|| Timing {
                seconds: outcome.ingest_seconds,
                rows_per_second: r.n as f64 / outcome.ingest_seconds.max(1e-12),
            }),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterMeta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub result: PathBuf,
    pub filter_k: f64,
    pub sigma_convention: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterArtifact {
    pub meta: FilterMeta,
    #[serde(flatten)]
    pub screened: Screened,
}

/// Index estimates stored in a result artifact.
pub fn indices_of(doc: &serde_json::Value) -> CliResult<Vec<f64>> {
    let per_input = doc["per_input"]
        .as_array()
        .ok_or_else(|| CliError::Artifact("result has no per_input list".into()))?;
    per_input
        .iter()
        .map(|entry| {
            entry["s"]
                .as_f64()
                .ok_or_else(|| CliError::Artifact(format!("per_input entry without numeric s: {entry}")))
        })
        .collect()
}
