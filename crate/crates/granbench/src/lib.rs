//! File formats, dataset loading, the experiment grid runner and reports
//! built on top of `granbench-core`.

pub mod config;
pub mod dataset;
pub mod error;
pub mod formats;
pub mod matrix;
pub mod plugin;
pub mod report;

pub use error::{HarnessError, Result};

/// Environment variable naming the cache directory for ingested streams.
pub const CACHE_DIR_ENV: &str = "GRANBENCH_CACHE_DIR";
