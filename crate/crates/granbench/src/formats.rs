//! CSV and JSON artifacts: dataset statistics, split manifests, negative
//! dumps and per-cell results.

use std::io::Write;
use std::path::Path;

use granbench_core::negsampling::{BatchNegatives, Strategy};
use granbench_core::split::{DatasetSplit, Segment};
use granbench_core::stream::Granularity;
use granbench_core::{DatasetStats, EvalCell};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const STATS_HEADER: [&str; 7] = [
    "dataset",
    "num_nodes",
    "total_edges",
    "unique_edges",
    "unique_steps",
    "duration_seconds",
    "duplication_ratio",
];

pub const RESULTS_HEADER: [&str; 12] = [
    "method",
    "dataset",
    "train_gran",
    "test_gran",
    "strategy",
    "auroc",
    "auroc_std",
    "ap",
    "ap_std",
    "n_pos",
    "n_neg",
    "fallback_frac",
];

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> HarnessError + '_ {
    move |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::io(path, source)
}

fn f6(v: f64) -> String {
    format!("{v:.6}")
}

/// Writes one statistics row per dataset.
pub fn write_stats<W: Write>(out: W, rows: &[(String, DatasetStats)]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(STATS_HEADER)?;
    for (name, s) in rows {
        w.write_record([
            name.clone(),
            s.num_nodes.to_string(),
            s.total_edges.to_string(),
            s.unique_edges.to_string(),
            s.unique_steps.to_string(),
            s.duration_seconds.to_string(),
            f6(s.duplication_ratio),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-segment entry of a split summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentSummary {
    pub split: String,
    pub day_start: i64,
    pub day_end: i64,
    pub n_events: usize,
    pub n_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub granularity: String,
    pub day0: i64,
    pub n_days: i64,
    pub train_days: i64,
    pub val_days: i64,
    pub test_days: i64,
    pub train_end_t: i64,
    pub val_end_t: i64,
    pub segments: Vec<SegmentSummary>,
}

impl SplitSummary {
    pub fn new(split: &DatasetSplit) -> Self {
        let b = &split.boundaries;
        let segments = Segment::ALL
            .iter()
            .map(|&seg| {
                let (day_start, day_end) = b.day_range(seg);
                let c = split.counts(seg);
                SegmentSummary {
                    split: seg.label().to_string(),
                    day_start,
                    day_end,
                    n_events: c.events,
                    n_steps: c.steps,
                }
            })
            .collect();
        SplitSummary {
            granularity: split.train.granularity().label().to_string(),
            day0: b.day0,
            n_days: b.n_days,
            train_days: b.train_days,
            val_days: b.val_days,
            test_days: b.test_days,
            train_end_t: b.train_end_t,
            val_end_t: b.val_end_t,
            segments,
        }
    }
}

/// Writes `split_manifest.csv` and `split_summary.json` into `dir`.
pub fn write_split_manifest(dir: &Path, split: &DatasetSplit) -> Result<()> {
    let summary = SplitSummary::new(split);
    let csv_path = dir.join("split_manifest.csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(csv_err(&csv_path))?;
    w.write_record(["split", "day_start", "day_end", "n_events"])
        .map_err(csv_err(&csv_path))?;
    for s in &summary.segments {
        w.write_record([
            s.split.clone(),
            s.day_start.to_string(),
            s.day_end.to_string(),
            s.n_events.to_string(),
        ])
        .map_err(csv_err(&csv_path))?;
    }
    w.flush().map_err(io_err(&csv_path))?;

    let json_path = dir.join("split_summary.json");
    let text = serde_json::to_string_pretty(&summary).map_err(|e| HarnessError::Json {
        path: json_path.clone(),
        source: e,
    })?;
    std::fs::write(&json_path, text + "\n").map_err(io_err(&json_path))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct NegativeRow {
    batch_idx: usize,
    src: u32,
    dst: u32,
    strategy: String,
    fallback: u8,
}

pub fn write_negatives(path: &Path, strategy: Strategy, batches: &[BatchNegatives]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for (batch_idx, b) in batches.iter().enumerate() {
        for (i, &(src, dst)) in b.pairs.iter().enumerate() {
            w.serialize(NegativeRow {
                batch_idx,
                src,
                dst,
                strategy: strategy.label().to_string(),
                fallback: b.is_fallback(i) as u8,
            })
            .map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(io_err(path))
}

/// Reads a negatives dump back into per-batch lists.
///
/// Batches must be numbered contiguously from 0; within a batch, fallback
/// rows must come last.
pub fn read_negatives(path: &Path) -> Result<Vec<BatchNegatives>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut batches: Vec<BatchNegatives> = Vec::new();
    for (i, row) in r.deserialize::<NegativeRow>().enumerate() {
        let row = row.map_err(csv_err(path))?;
        let line = i + 2;
        let format = |message: String| HarnessError::Format {
            path: path.to_path_buf(),
            line,
            message,
        };
        if row.batch_idx == batches.len() {
            batches.push(BatchNegatives::default());
        } else if row.batch_idx + 1 != batches.len() {
            return Err(format(format!(
                "batch_idx {} out of order after batch {}",
                row.batch_idx,
                batches.len() as i64 - 1
            )));
        }
        let b = batches.last_mut().expect("pushed above");
        match row.fallback {
            0 if b.fallback > 0 => {
                return Err(format("pool negative after a fallback negative".into()))
            }
            0 => {}
            1 => b.fallback += 1,
            other => return Err(format(format!("fallback flag must be 0 or 1, got {other}"))),
        }
        b.pairs.push((row.src, row.dst));
    }
    Ok(batches)
}

/// One line of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: String,
    pub dataset: String,
    #[serde(with = "label")]
    pub train_gran: Granularity,
    #[serde(with = "label")]
    pub test_gran: Granularity,
    #[serde(with = "label")]
    pub strategy: Strategy,
    pub auroc: f64,
    pub auroc_std: f64,
    pub ap: f64,
    pub ap_std: f64,
    pub n_pos: usize,
    pub n_neg: usize,
    pub fallback_frac: f64,
}

impl ResultRow {
    pub fn new(
        method: &str,
        dataset: &str,
        train_gran: Granularity,
        test_gran: Granularity,
        strategy: Strategy,
        cell: &EvalCell,
    ) -> Self {
        ResultRow {
            method: method.to_string(),
            dataset: dataset.to_string(),
            train_gran,
            test_gran,
            strategy,
            auroc: cell.auroc,
            auroc_std: cell.auroc_std,
            ap: cell.ap,
            ap_std: cell.ap_std,
            n_pos: cell.n_pos,
            n_neg: cell.n_neg,
            fallback_frac: cell.fallback_fraction,
        }
    }

    fn record(&self) -> [String; 12] {
        [
            self.method.clone(),
            self.dataset.clone(),
            self.train_gran.label().to_string(),
            self.test_gran.label().to_string(),
            self.strategy.label().to_string(),
            f6(self.auroc),
            f6(self.auroc_std),
            f6(self.ap),
            f6(self.ap_std),
            self.n_pos.to_string(),
            self.n_neg.to_string(),
            f6(self.fallback_frac),
        ]
    }
}

/// Writes results with every float at six decimals so output bytes depend
/// only on the rounded values.
pub fn write_results<W: Write>(out: W, rows: &[ResultRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let headers = r.headers().map_err(csv_err(path))?.clone();
    if headers.iter().ne(RESULTS_HEADER) {
        return Err(HarnessError::Format {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header `{}`", RESULTS_HEADER.join(",")),
        });
    }
    r.deserialize()
        .collect::<csv::Result<Vec<ResultRow>>>()
        .map_err(csv_err(path))
}

/// Serde adapter for types that round-trip through `Display` and `FromStr`.
mod label {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        let s = String::deserialize(d)?;
        T::from_str(&s).map_err(D::Error::custom)
    }
}
