use std::io;
use std::path::PathBuf;

use sobol_stream::io::ReadError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("input: {0}")]
    Read(#[from] ReadError),
    #[error("{0}")]
    Data(sobol_stream::Error),
    #[error("{0}")]
    Estimation(sobol_stream::Error),
    #[error("{0}")]
    Artifact(String),
    /// The result was produced and written, but no noise threshold exists.
    #[error("noise threshold unavailable: {0}")]
    HeuristicUnavailable(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1: input or data, 2: usage, 3: estimation, 4: heuristic unavailable.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Read(_) | CliError::Data(_) | CliError::Artifact(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Estimation(_) => 3,
            CliError::HeuristicUnavailable(_) => 4,
        }
    }
}

impl From<sobol_stream::Error> for CliError {
    fn from(e: sobol_stream::Error) -> Self {
        use sobol_stream::Error as E;
        let root = match &e {
            E::Input { source, .. } => source.as_ref(),
            other => other,
        };
        match root {
            E::NonFinite { .. } | E::EmptySamples | E::ShapeMismatch { .. } | E::InvalidSnapshot(_) => {
                CliError::Data(e)
            }
            E::InvalidParameter(_) => CliError::Usage(e.to_string()),
            _ => CliError::Estimation(e),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
