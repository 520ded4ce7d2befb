use alloc::string::String;

use crate::stream::Granularity;
use crate::Timestamp;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("edge stream is empty")]
    EmptyStream,

    #[error("cannot coarsen a {from} stream to the finer {to} granularity")]
    InvalidCoarsening { from: Granularity, to: Granularity },

    #[error("unknown granularity `{0}`")]
    UnknownGranularity(String),

    #[error("dataset spans {n_days} day(s); at least 6 are needed for a day-anchored split")]
    TooShort { n_days: i64 },

    #[error("empty split (train={train}, val={val}, test={test})")]
    EmptySplit {
        train: usize,
        val: usize,
        test: usize,
    },

    #[error("split boundaries differ between granularities ({left_train_end}/{left_val_end} vs {right_train_end}/{right_val_end})")]
    BoundaryMismatch {
        left_train_end: Timestamp,
        left_val_end: Timestamp,
        right_train_end: Timestamp,
        right_val_end: Timestamp,
    },

    #[error("node universe is empty")]
    EmptyUniverse,

    #[error("could not draw a negative that avoids the batch positives")]
    SamplingExhausted,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),

    #[error("incomplete result table: no value for method `{method}` on dataset `{dataset}`")]
    IncompleteTable { method: String, dataset: String },

    #[error("pinned negatives exhausted at batch {batch}")]
    PinnedExhausted { batch: usize },

    #[error("predictor failed: {0}")]
    Predictor(String),
}
