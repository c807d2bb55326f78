//! Command-line driver for the streaming Sobol' estimator.
//!
//! The subcommands are thin wrappers over [`analyze::stream_analysis`],
//! [`study::run_study`] and [`diagnose::run_diagnose`], which are public so
//! they can be driven from tests and other tools.

pub mod analyze;
pub mod artifact;
pub mod diagnose;
pub mod error;
pub mod source;
pub mod study;

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use sobol_stream::io::{Format, SampleWriter};
use sobol_stream::{ModelSpec, Scheme, SobolAccumulator};

use crate::analyze::{
    indices_of, screen, stream_analysis, AnalysisSettings, FilterArtifact, FilterMeta, ResultArtifact,
    DEFAULT_BATCH_SIZE, DEFAULT_BINS, DEFAULT_INIT_PER_BIN, TOOL, VERSION,
};
use crate::artifact::{read_json, render, write_text};
use crate::diagnose::{run_diagnose, DiagnoseSettings};
use crate::error::{CliError, CliResult};
use crate::source::{BatchSource, FileSource, ModelSource, SourceSpec};
use crate::study::{run_study, StudySettings};

#[derive(Debug, Parser)]
#[command(name = "sobol-stream", version, about = "Streaming first-order Sobol' index estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate indices from a sample stream or a built-in model.
    Analyze(AnalyzeArgs),
    /// Replicate study on a built-in model.
    Study(StudyArgs),
    /// Re-apply the noise threshold to a result file.
    Filter(FilterArgs),
    /// Per-bin bias decomposition against exact statistics.
    Diagnose(DiagnoseArgs),
    /// Write samples of a built-in model to a file.
    Generate(GenerateArgs),
}

fn parse_truncation(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected LO,HI")?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad lower level '{lo}'"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad upper level '{hi}'"))?;
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(format!("need 0 <= LO < HI <= 1, got {lo},{hi}"));
    }
    Ok((lo, hi))
}

#[derive(Debug, Clone, Args)]
pub struct PartitionArgs {
    /// Bins per input (M).
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
    /// Rows that define the partitions [default: 100 per bin].
    #[arg(long)]
    pub init_samples: Option<usize>,
    /// Quantile levels bounding the equidistant range, e.g. 0.01,0.99.
    #[arg(long, value_parser = parse_truncation, value_name = "LO,HI")]
    pub truncate: Option<(f64, f64)>,
}

impl PartitionArgs {
    fn init_samples(&self) -> usize {
        self.init_samples.unwrap_or(DEFAULT_INIT_PER_BIN * self.bins)
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Built-in model name (see README for the list).
    #[arg(long)]
    pub model: Option<String>,
    /// Comma-separated model parameters; missing trailing values take defaults.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub model_params: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl ModelArgs {
    fn spec(&self) -> CliResult<ModelSpec> {
        let name = self
            .model
            .as_deref()
            .ok_or_else(|| CliError::Usage("--model is required".into()))?;
        Ok(ModelSpec::from_name(name, &self.model_params)?)
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Partition scheme.
    #[arg(long, default_value = "quantile")]
    pub scheme: Scheme,
    #[command(flatten)]
    pub partition: PartitionArgs,
    /// Sample file (`-` for standard input).
    #[arg(long, conflicts_with = "model")]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    pub format: Format,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Samples to draw from --model.
    #[arg(short = 'n', long)]
    pub samples: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_BATCH_SIZE)]
    pub batch_size: usize,
    /// Record a snapshot every this many samples (0 = off).
    #[arg(long, default_value_t = 0)]
    pub snapshot_every: u64,
    #[arg(long, default_value_t = sobol_stream::heuristic::DEFAULT_K)]
    pub filter_k: f64,
    /// Include full per-input bin counts.
    #[arg(long)]
    pub bin_counts: bool,
    /// Save the accumulator state here after the run.
    #[arg(long)]
    pub save_state: Option<PathBuf>,
    /// Continue from a saved accumulator state.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Add wall-clock timing (excluded from the determinism hash).
    #[arg(long)]
    pub timing: bool,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated partition schemes.
    #[arg(long, value_delimiter = ',', default_value = "quantile")]
    pub scheme: Vec<Scheme>,
    #[command(flatten)]
    pub partition: PartitionArgs,
    #[arg(short = 'n', long, default_value_t = 100_000)]
    pub samples: u64,
    /// Comma-separated sample sizes; overrides -n.
    #[arg(long, value_delimiter = ',')]
    pub sweep_n: Vec<u64>,
    #[arg(long, default_value_t = 100)]
    pub replicates: usize,
    #[arg(long, default_value_t = DEFAULT_BATCH_SIZE)]
    pub batch_size: usize,
    #[arg(long, default_value_t = sobol_stream::heuristic::DEFAULT_K)]
    pub filter_k: f64,
    /// Oracle samples for models without closed-form indices (0 = none).
    #[arg(long, default_value_t = 0)]
    pub oracle_samples: usize,
    /// Cache file for oracle reference values.
    #[arg(long)]
    pub oracle_cache: Option<PathBuf>,
    /// Directory for plot-ready CSV files.
    #[arg(long)]
    pub plot_dir: Option<PathBuf>,
    #[arg(long)]
    pub timing: bool,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Result file written by `analyze`.
    pub result: PathBuf,
    #[arg(short = 'k', long, default_value_t = sobol_stream::heuristic::DEFAULT_K)]
    pub filter_k: f64,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long, default_value = "polynomial-normal")]
    pub model: String,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub model_params: Vec<f64>,
    /// 0-based input to diagnose.
    #[arg(long, default_value_t = 1)]
    pub input_index: usize,
    #[arg(long, value_delimiter = ',', default_value = "quantile,equidistant")]
    pub scheme: Vec<Scheme>,
    #[command(flatten)]
    pub partition: PartitionArgs,
    #[arg(short = 'n', long, default_value_t = 1_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 100)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub plot_dir: Option<PathBuf>,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(short = 'n', long)]
    pub samples: u64,
    #[arg(long, default_value = "csv")]
    pub format: Format,
    #[arg(long, default_value_t = DEFAULT_BATCH_SIZE)]
    pub batch_size: usize,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Analyze(args) => analyze(args),
        Command::Study(args) => study(args),
        Command::Filter(args) => filter(args),
        Command::Diagnose(args) => diagnose(args),
        Command::Generate(args) => generate(args),
    }
}

fn heuristic_status(screened: &analyze::Screened) -> CliResult<()> {
    match &screened.threshold_unavailable {
        Some(reason) => Err(CliError::HeuristicUnavailable(reason.clone())),
        None => Ok(()),
    }
}

fn analyze(args: AnalyzeArgs) -> CliResult<()> {
    let settings = AnalysisSettings {
        scheme: args.scheme,
        bins: args.partition.bins,
        batch_size: args.batch_size,
        init_samples: args.partition.init_samples(),
        truncation: args.partition.truncate,
        snapshot_every: args.snapshot_every,
        filter_k: args.filter_k,
        full_bin_counts: args.bin_counts,
    };
    settings.validate()?;
    let resume = match &args.resume {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            Some(SobolAccumulator::from_snapshot_json(&text)?)
        }
        None => None,
    };
    let (mut source, spec, seed): (Box<dyn BatchSource>, SourceSpec, Option<u64>) = match (&args.input, &args.model.model) {
        (Some(path), None) => (
            Box::new(FileSource::open(path, args.format)?),
            SourceSpec::File {
                path: path.clone(),
                format: args.format.to_string(),
            },
            None,
        ),
        (None, Some(_)) => {
            let model = args.model.spec()?;
            let samples = args
                .samples
                .ok_or_else(|| CliError::Usage("-n/--samples is required with --model".into()))?;
            let skip = resume.as_ref().map_or(0, |acc| acc.n_seen());
            (
                Box::new(ModelSource::new(model, samples, args.model.seed).starting_at(skip)),
                SourceSpec::Model { model, samples },
                Some(args.model.seed),
            )
        }
        _ => return Err(CliError::Usage("give exactly one of --input or --model".into())),
    };
    let outcome = stream_analysis(&settings, source.as_mut(), resume)?;
    if let Some(path) = &args.save_state {
        write_text(path, &outcome.accumulator.to_snapshot_json())?;
    }
    let artifact = ResultArtifact::build(&settings, &outcome, spec, seed, args.resume.clone(), args.timing)?;
    write_text(&args.out, &render(&artifact)?)?;
    heuristic_status(&artifact.screened)
}

fn study(args: StudyArgs) -> CliResult<()> {
    let model = args.model.spec()?;
    let settings = StudySettings {
        model,
        schemes: args.scheme,
        sample_sizes: if args.sweep_n.is_empty() { vec![args.samples] } else { args.sweep_n },
        replicates: args.replicates,
        seed: args.model.seed,
        analysis: AnalysisSettings {
            bins: args.partition.bins,
            batch_size: args.batch_size,
            init_samples: args.partition.init_samples(),
            truncation: args.partition.truncate,
            filter_k: args.filter_k,
            ..AnalysisSettings::default()
        },
        oracle_samples: args.oracle_samples,
        oracle_cache: args.oracle_cache,
    };
    let mut artifact = run_study(&settings)?;
    if !args.timing {
        artifact.timing = None;
    }
    if let Some(dir) = &args.plot_dir {
        study::write_plot_data(&artifact, dir)?;
    }
    write_text(&args.out, &render(&artifact)?)
}

fn filter(args: FilterArgs) -> CliResult<()> {
    let doc = read_json(&args.result)?;
    let indices = indices_of(&doc)?;
    let screened = screen(&indices, args.filter_k)?;
    let artifact = FilterArtifact {
        meta: FilterMeta {
            tool: TOOL,
            version: VERSION,
            command: "filter",
            result: args.result.clone(),
            filter_k: args.filter_k,
            sigma_convention: sobol_stream::heuristic::SIGMA_CONVENTION,
        },
        screened,
    };
    write_text(&args.out, &render(&artifact)?)?;
    heuristic_status(&artifact.screened)
}

fn diagnose(args: DiagnoseArgs) -> CliResult<()> {
    let settings = DiagnoseSettings {
        model: ModelSpec::from_name(&args.model, &args.model_params)?,
        input: args.input_index,
        bins: args.partition.bins,
        samples: args.samples,
        init_samples: args
            .partition
            .init_samples
            .unwrap_or_else(|| (DEFAULT_INIT_PER_BIN * args.partition.bins).min(args.samples as usize)),
        replicates: args.replicates,
        seed: args.seed,
        schemes: args.scheme,
        truncation: args.partition.truncate,
    };
    let artifact = run_diagnose(&settings)?;
    if let Some(dir) = &args.plot_dir {
        diagnose::write_plot_data(&artifact, dir)?;
    }
    write_text(&args.out, &render(&artifact)?)
}

fn generate(args: GenerateArgs) -> CliResult<()> {
    let model = args.model.spec()?;
    if args.batch_size == 0 {
        return Err(CliError::Usage("--batch-size must be at least 1".into()));
    }
    let out: Box<dyn std::io::Write> = if args.out.as_os_str() == "-" {
        Box::new(std::io::stdout().lock())
    } else {
        Box::new(fs::File::create(&args.out).map_err(|e| CliError::io(&args.out, e))?)
    };
    let io_err = |e| CliError::io(&args.out, e);
    let mut writer = SampleWriter::new(out, args.format, model.dim()).map_err(io_err)?;
    let mut source = ModelSource::new(model, args.samples, args.model.seed);
    while let Some((x, y)) = source.next_batch(args.batch_size)? {
        writer.write_rows(x.view(), y.view()).map_err(io_err)?;
    }
    writer.finish().map_err(io_err)?;
    Ok(())
}
