//! Serializable accumulator state for resuming ingestion across processes.
//!
//! The snapshot is a self-describing JSON document holding the scheme, the
//! interior edges of every input, every per-bin moment triple, the total
//! moments and the sample count. Floats are written in shortest
//! round-trip form and parsed exactly, so save/load is lossless.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::SobolAccumulator;
use crate::partition::{Partition, Scheme};
use crate::streamstats::RunningMoments;

pub const SNAPSHOT_FORMAT: &str = "sobol-stream-accumulator";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccumulatorSnapshot {
    pub format: String,
    pub version: u32,
    pub scheme: Scheme,
    pub n_seen: u64,
    pub total: RunningMoments,
    pub inputs: Vec<InputState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputState {
    pub edges: Vec<f64>,
    pub requested_bins: usize,
    pub collapsed_edges: usize,
    pub cells: Vec<RunningMoments>,
}

impl From<&SobolAccumulator> for AccumulatorSnapshot {
    fn from(acc: &SobolAccumulator) -> Self {
        AccumulatorSnapshot {
            format: SNAPSHOT_FORMAT.to_string(),
            version: SNAPSHOT_VERSION,
            scheme: acc.scheme(),
            n_seen: acc.n_seen,
            total: acc.total,
            inputs: acc
                .partitions
                .iter()
                .zip(&acc.cells)
                .map(|(p, cells)| InputState {
                    edges: p.interior_edges().to_vec(),
                    requested_bins: p.requested_bins(),
                    collapsed_edges: p.collapsed_edges(),
                    cells: cells.clone(),
                })
                .collect(),
        }
    }
}

impl TryFrom<AccumulatorSnapshot> for SobolAccumulator {
    type Error = Error;

    fn try_from(snap: AccumulatorSnapshot) -> Result<Self> {
        let invalid = |msg: String| Error::InvalidSnapshot(msg);
        if snap.format != SNAPSHOT_FORMAT {
            return Err(invalid(format!("unexpected format tag '{}'", snap.format)));
        }
        if snap.version != SNAPSHOT_VERSION {
            return Err(invalid(format!("unsupported version {}", snap.version)));
        }
        if snap.total.n != snap.n_seen {
            return Err(invalid(format!(
                "total count {} differs from n_seen {}",
                snap.total.n, snap.n_seen
            )));
        }
        let mut partitions = Vec::with_capacity(snap.inputs.len());
        let mut cells = Vec::with_capacity(snap.inputs.len());
        for (i, input) in snap.inputs.into_iter().enumerate() {
            let mut p = Partition::from_edges(input.edges, snap.scheme).map_err(|e| e.for_input(i))?;
            if input.cells.len() != p.m_effective() {
                return Err(invalid(format!(
                    "input {i}: {} cells for {} bins",
                    input.cells.len(),
                    p.m_effective()
                )));
            }
            let count: u64 = input.cells.iter().map(|c| c.n).sum();
            if count != snap.n_seen {
                return Err(invalid(format!(
                    "input {i}: bin counts sum to {count}, expected {}",
                    snap.n_seen
                )));
            }
            p.set_provenance(input.requested_bins, input.collapsed_edges);
            partitions.push(p);
            cells.push(input.cells);
        }
        let mut acc = SobolAccumulator::with_partitions(partitions)?;
        acc.cells = cells;
        acc.total = snap.total;
        acc.n_seen = snap.n_seen;
        Ok(acc)
    }
}

impl SobolAccumulator {
    pub fn to_snapshot(&self) -> AccumulatorSnapshot {
        AccumulatorSnapshot::from(self)
    }

    pub fn to_snapshot_json(&self) -> String {
        serde_json::to_string(&self.to_snapshot()).expect("snapshot serializes")
    }

    pub fn from_snapshot_json(json: &str) -> Result<Self> {
        let snap: AccumulatorSnapshot =
            serde_json::from_str(json).map_err(|e| Error::InvalidSnapshot(e.to_string()))?;
        snap.try_into()
    }
}
