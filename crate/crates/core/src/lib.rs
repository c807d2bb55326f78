//! Streaming given-data estimation of first-order Sobol' sensitivity indices.
//!
//! Output samples are binned per input by a fixed partition and reduced to
//! mergeable per-bin moments, so indices can be computed from sample streams
//! far larger than memory:
//!
//! ```
//! use ndarray::array;
//! use sobol_stream::{PartitionConfig, Scheme, SobolAccumulator};
//!
//! let x = array![[1.0], [2.0], [3.0], [4.0]];
//! let y = array![1.0, 2.0, 3.0, 4.0];
//! let acc = SobolAccumulator::initialize(x.view(), y.view(), &PartitionConfig::new(Scheme::Quantile, 2))?;
//! let result = acc.finalize()?;
//! assert!((result.s[0] - 0.55).abs() < 1e-12);
//! # Ok::<(), sobol_stream::Error>(())
//! ```

pub mod error;
pub mod estimator;
pub mod heuristic;
pub mod io;
pub mod models;
pub mod partition;
pub mod snapshot;
pub mod streamstats;

pub use error::{Error, Result};
pub use estimator::{all_at_once, SobolAccumulator, SobolResult};
pub use heuristic::{filter, noise_sigma, NoiseThreshold, Screening};
pub use models::{InputLaw, ModelSpec, ReferenceIndices};
pub use partition::{Partition, PartitionConfig, Scheme};
pub use snapshot::AccumulatorSnapshot;
pub use streamstats::RunningMoments;
