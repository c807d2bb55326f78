//! Sample stream formats.
//!
//! * CSV: a header row, then one sample per row with the `d` input columns
//!   followed by the output column.
//! * f64le: a 16-byte header (`b"SOBOLF64"`, format version as `u32` LE,
//!   `d` as `u32` LE) followed by row-major records of `d + 1` little-endian
//!   `f64` values, inputs first.

use std::fmt;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use thiserror::Error;

pub const F64LE_MAGIC: &[u8; 8] = b"SOBOLF64";
pub const F64LE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ReadError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("bad header: {0}")]
    Header(String),
    #[error("row {row}: {message}")]
    Malformed { row: u64, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    F64Le,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "f64le" => Ok(Format::F64Le),
            other => Err(format!("unknown format '{other}' (expected csv or f64le)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::F64Le => "f64le",
        })
    }
}

enum Source {
    Csv(csv::Reader<Box<dyn Read>>, csv::StringRecord),
    Binary(BufReader<Box<dyn Read>>, Vec<u8>),
}

/// Reads samples in row batches.
pub struct SampleReader {
    source: Source,
    dim: usize,
    rows_read: u64,
}

impl SampleReader {
    pub fn new(reader: Box<dyn Read>, format: Format) -> Result<Self, ReadError> {
        match format {
            Format::Csv => {
                let mut csv = csv::ReaderBuilder::new()
                    .has_headers(true)
                    .trim(csv::Trim::All)
                    .from_reader(reader);
                let columns = csv
                    .headers()
                    .map_err(|e| ReadError::Header(e.to_string()))?
                    .len();
                if columns < 2 {
                    return Err(ReadError::Header(format!(
                        "need at least one input and one output column, found {columns}"
                    )));
                }
                Ok(SampleReader {
                    source: Source::Csv(csv, csv::StringRecord::new()),
                    dim: columns - 1,
                    rows_read: 0,
                })
            }
            Format::F64Le => {
                let mut reader = BufReader::with_capacity(1 << 20, reader);
                let mut header = [0u8; 16];
                reader
                    .read_exact(&mut header)
                    .map_err(|e| ReadError::Header(format!("truncated header: {e}")))?;
                if &header[..8] != F64LE_MAGIC {
                    return Err(ReadError::Header("missing SOBOLF64 magic".into()));
                }
                let version = u32::from_le_bytes(header[8..12].try_into().unwrap());
                if version != F64LE_VERSION {
                    return Err(ReadError::Header(format!("unsupported version {version}")));
                }
                let dim = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
                if dim == 0 {
                    return Err(ReadError::Header("input dimension is zero".into()));
                }
                Ok(SampleReader {
                    source: Source::Binary(reader, vec![0u8; 8 * (dim + 1)]),
                    dim,
                    rows_read: 0,
                })
            }
        }
    }

    /// Number of input columns.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows_read(&self) -> u64 {
        self.rows_read
    }

    /// Reads up to `max_rows` samples; `None` at end of stream.
    pub fn next_batch(&mut self, max_rows: usize) -> Result<Option<(Array2<f64>, Array1<f64>)>, ReadError> {
        let width = self.dim + 1;
        let mut values = Vec::with_capacity(max_rows.min(1 << 16) * width);
        let mut rows = 0;
        while rows < max_rows {
            let row = self.rows_read + 1;
            let got = match &mut self.source {
                Source::Csv(reader, record) => {
                    let more = reader.read_record(record).map_err(|e| ReadError::Malformed {
                        row,
                        message: e.to_string(),
                    })?;
                    if more {
                        if record.len() != width {
                            return Err(ReadError::Malformed {
                                row,
                                message: format!("expected {width} fields, found {}", record.len()),
                            });
                        }
                        for field in record.iter() {
                            let v: f64 = field.parse().map_err(|_| ReadError::Malformed {
                                row,
                                message: format!("cannot parse '{field}' as a number"),
                            })?;
                            values.push(v);
                        }
                    }
                    more
                }
                Source::Binary(reader, buf) => match read_record(reader, buf)? {
                    0 => false,
                    n if n == buf.len() => {
                        values.extend(
                            buf.chunks_exact(8)
                                .map(|b| f64::from_le_bytes(b.try_into().unwrap())),
                        );
                        true
                    }
                    n => {
                        return Err(ReadError::Malformed {
                            row,
                            message: format!("truncated record ({n} of {} bytes)", buf.len()),
                        })
                    }
                },
            };
            if !got {
                break;
            }
            if let Some(bad) = values[values.len() - width..].iter().find(|v| !v.is_finite()) {
                return Err(ReadError::Malformed {
                    row,
                    message: format!("non-finite value {bad}"),
                });
            }
            rows += 1;
            self.rows_read += 1;
        }
        if rows == 0 {
            return Ok(None);
        }
        let table = Array2::from_shape_vec((rows, width), values).expect("row-major table");
        let x = table.slice(ndarray::s![.., ..self.dim]).to_owned();
        let y = table.column(self.dim).to_owned();
        Ok(Some((x, y)))
    }
}

/// Fills `buf` unless the stream ends first; returns the bytes read.
fn read_record(reader: &mut impl Read, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match reader.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

/// Writes samples in either format.
pub struct SampleWriter<W: Write> {
    out: BufWriter<W>,
    format: Format,
    dim: usize,
}

impl<W: Write> SampleWriter<W> {
    pub fn new(out: W, format: Format, dim: usize) -> io::Result<Self> {
        let mut out = BufWriter::with_capacity(1 << 20, out);
        match format {
            Format::Csv => {
                let header: Vec<String> = (0..dim)
                    .map(|j| format!("x{j}"))
                    .chain(std::iter::once("y".to_string()))
                    .collect();
                writeln!(out, "{}", header.join(","))?;
            }
            Format::F64Le => {
                out.write_all(F64LE_MAGIC)?;
                out.write_all(&F64LE_VERSION.to_le_bytes())?;
                out.write_all(&(dim as u32).to_le_bytes())?;
            }
        }
        Ok(SampleWriter { out, format, dim })
    }

    pub fn write_rows(&mut self, x: ArrayView2<f64>, y: ArrayView1<f64>) -> io::Result<()> {
        assert_eq!(x.ncols(), self.dim, "column count");
        assert_eq!(x.nrows(), y.len(), "row count");
        for (row, &out) in x.rows().into_iter().zip(y) {
            match self.format {
                Format::Csv => {
                    for v in row {
                        write!(self.out, "{v:?},")?;
                    }
                    writeln!(self.out, "{out:?}")?;
                }
                Format::F64Le => {
                    for v in row.iter().chain(std::iter::once(&out)) {
                        self.out.write_all(&v.to_le_bytes())?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        self.out.into_inner().map_err(|e| e.into_error())
    }
}
