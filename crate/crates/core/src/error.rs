use thiserror::Error;

/// Errors raised by partition construction, estimation and the test models.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value {value} at position {position}")]
    NonFinite { position: usize, value: f64 },

    #[error("empty sample set")]
    EmptySamples,

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("degenerate partition: {0}")]
    DegeneratePartition(String),

    #[error("degenerate density: kernel density estimate needs at least 2 distinct values")]
    DegenerateDensity,

    #[error("degenerate range: lower and upper partition bounds coincide at {0}")]
    DegenerateRange(f64),

    #[error("input {input}: {source}")]
    Input {
        input: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("total output variance is zero; Sobol' indices are undefined")]
    ZeroVariance,

    #[error("insufficient data: need at least 2 samples, have {0}")]
    InsufficientData(u64),

    #[error("no negative indices: the noise level cannot be estimated (fall back to a zero threshold explicitly if intended)")]
    NoNegativeIndices,

    #[error("no closed form available: {0}")]
    NoClosedForm(String),

    #[error("accumulators use different partitions and cannot be merged")]
    PartitionMismatch,

    #[error("invalid snapshot: {0}")]
    InvalidSnapshot(String),
}

impl Error {
    pub(crate) fn for_input(self, input: usize) -> Error {
        Error::Input {
            input,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Returns an error for the first non-finite entry of `values`.
pub(crate) fn check_finite(values: impl IntoIterator<Item = f64>) -> Result<()> {
    for (position, value) in values.into_iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { position, value });
        }
    }
    Ok(())
}
