use std::fs::File;
use std::io::{self, Read};
use std::path::PathBuf;

use ndarray::{Array1, Array2};
use serde::Serialize;
use sobol_stream::io::{Format, SampleReader};
use sobol_stream::models::generate;
use sobol_stream::ModelSpec;

use crate::error::{CliError, CliResult};

/// Where samples come from, as recorded in result metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceSpec {
    File { path: PathBuf, format: String },
    Model { model: ModelSpec, samples: u64 },
}

/// A sequential stream of `(x, y)` row batches.
pub trait BatchSource {
    fn dim(&self) -> usize;
    /// Up to `max_rows` rows; `None` once the stream is exhausted.
    fn next_batch(&mut self, max_rows: usize) -> CliResult<Option<(Array2<f64>, Array1<f64>)>>;
}

pub struct FileSource {
    reader: SampleReader,
}

impl FileSource {
    /// Opens `path`, with `-` meaning standard input.
    pub fn open(path: &PathBuf, format: Format) -> CliResult<Self> {
        let input: Box<dyn Read> = if path.as_os_str() == "-" {
            Box::new(io::stdin().lock())
        } else {
            Box::new(File::open(path).map_err(|e| CliError::io(path, e))?)
        };
        Ok(FileSource {
            reader: SampleReader::new(input, format)?,
        })
    }
}

impl BatchSource for FileSource {
    fn dim(&self) -> usize {
        self.reader.dim()
    }

    fn next_batch(&mut self, max_rows: usize) -> CliResult<Option<(Array2<f64>, Array1<f64>)>> {
        Ok(self.reader.next_batch(max_rows)?)
    }
}

/// Rows `next .. end` of a built-in model's sample stream.
pub struct ModelSource {
    spec: ModelSpec,
    seed: u64,
    next: u64,
    end: u64,
}

impl ModelSource {
    pub fn new(spec: ModelSpec, samples: u64, seed: u64) -> Self {
        ModelSource {
            spec,
            seed,
            next: 0,
            end: samples,
        }
    }

    /// Skips rows already consumed, e.g. when resuming from saved state.
    pub fn starting_at(mut self, row: u64) -> Self {
        self.next = row.min(self.end);
        self
    }
}

impl BatchSource for ModelSource {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn next_batch(&mut self, max_rows: usize) -> CliResult<Option<(Array2<f64>, Array1<f64>)>> {
        let rows = (self.end - self.next).min(max_rows as u64) as usize;
        if rows == 0 {
            return Ok(None);
        }
        let sample = generate(&self.spec, self.next, rows, self.seed)?;
        self.next += rows as u64;
        Ok(Some((sample.x, sample.y)))
    }
}

/// Reads exactly `rows` rows unless the stream ends first.
pub fn read_rows(source: &mut dyn BatchSource, rows: usize) -> CliResult<Option<(Array2<f64>, Array1<f64>)>> {
    let mut parts = Vec::new();
    let mut got = 0;
    while got < rows {
        match source.next_batch(rows - got)? {
            Some((x, y)) => {
                got += y.len();
                parts.push((x, y));
            }
            None => break,
        }
    }
    match parts.len() {
        0 => Ok(None),
        1 => Ok(parts.pop()),
        _ => {
            let xs: Vec<_> = parts.iter().map(|(x, _)| x.view()).collect();
            let ys: Vec<_> = parts.iter().map(|(_, y)| y.view()).collect();
            let x = ndarray::concatenate(ndarray::Axis(0), &xs).expect("equal widths");
            let y = ndarray::concatenate(ndarray::Axis(0), &ys).expect("vectors");
            Ok(Some((x, y)))
        }
    }
}
