//! Core algorithms for benchmarking dynamic link prediction across time
//! granularities.
//!
//! Everything here works on in-memory data and needs only `alloc`: the
//! event stream model and timestamp coarsening, day-anchored and
//! chronological splits, the three negative sampling regimes, the EdgeBank
//! baselines, AU-ROC / AP scoring with rank aggregation, and the per-cell
//! evaluation pipeline. File IO, report formats and the CLI live in the
//! `granbench` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod edgebank;
pub mod error;
pub mod ingest;
pub mod metrics;
pub mod negsampling;
pub mod pipeline;
pub mod split;
pub mod stream;

pub use edgebank::{EdgeBank, EdgeBankVariant, InitContext, LinkPredictor};
pub use error::{Error, Result};
pub use ingest::{EdgeListFormat, StreamBuilder};
pub use metrics::{EvalCell, RankTable, ScoredSample};
pub use negsampling::{NegativePools, SamplerConfig, Strategy};
pub use split::{DatasetSplit, Segment, SplitBoundaries};
pub use stream::{DatasetStats, EdgeStream, Event, Granularity};

/// Node identifier. Bipartite item ids are offset past the user range at
/// ingestion so one id space covers both sides.
pub type NodeId = u32;

/// Whole seconds since the Unix epoch.
pub type Timestamp = i64;

/// A directed `(src, dst)` pair.
pub type Edge = (NodeId, NodeId);

pub const SECONDS_PER_DAY: Timestamp = 86_400;
