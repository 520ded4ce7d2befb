//! Report files for a finished grid. Every file is written from the calling
//! thread after all cells have completed.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use granbench_core::negsampling::Strategy;
use granbench_core::stream::Granularity;
use granbench_core::RankTable;

use crate::error::{HarnessError, Result};
use crate::formats::{write_negatives, write_results, ResultRow};
use crate::matrix::{CellRecord, MatrixOutput};

/// Creates `dir` and proves it writable before any computation starts.
pub fn ensure_writable(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let probe = dir.join(".granbench-write-probe");
    File::create(&probe).map_err(|e| HarnessError::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| HarnessError::io(&probe, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| HarnessError::io(path, e))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> HarnessError + '_ {
    move |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Successful cells as results rows, in record order.
pub fn result_rows(records: &[CellRecord]) -> Vec<ResultRow> {
    records
        .iter()
        .filter_map(|r| {
            let cell = r.result.as_ref().ok()?;
            Some(ResultRow::new(
                &r.method, &r.dataset, r.train_g, r.test_g, r.strategy, cell,
            ))
        })
        .collect()
}

pub fn write_matrix_csv<W: Write>(out: W, records: &[CellRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "dataset",
        "method",
        "strategy",
        "train_gran",
        "test_gran",
        "status",
        "auroc",
        "ap",
        "runs",
        "undefined_runs",
        "error",
    ])?;
    for r in records {
        let (status, auroc, ap, runs, undefined, error) = match &r.result {
            Ok(c) => (
                "ok",
                format!("{:.6}", c.auroc),
                format!("{:.6}", c.ap),
                c.runs.to_string(),
                c.undefined_runs.to_string(),
                String::new(),
            ),
            Err(e) => (
                "failed",
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                e.clone(),
            ),
        };
        w.write_record([
            r.dataset.as_str(),
            r.method.as_str(),
            r.strategy.label(),
            r.train_g.label(),
            r.test_g.label(),
            status,
            &auroc,
            &ap,
            &runs,
            &undefined,
            &error,
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Rank table with one `<granularity>_<strategy>` column per pair,
/// granularity-major. Missing entries are left empty.
pub fn write_ranks_csv<W: Write>(
    out: W,
    table: &RankTable,
    granularities: &[Granularity],
    strategies: &[Strategy],
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["method".to_string()];
    for g in granularities {
        for s in strategies {
            header.push(format!("{}_{}", g.label(), s.label()));
        }
    }
    w.write_record(&header)?;
    for method in table.methods() {
        let mut row = vec![method.clone()];
        for &g in granularities {
            for &s in strategies {
                row.push(
                    table
                        .rank(s, g, &method)
                        .map(|r| format!("{r:.3}"))
                        .unwrap_or_default(),
                );
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_summary<W: Write>(mut out: W, output: &MatrixOutput) -> std::io::Result<()> {
    let total = output.records.len();
    let failed = output.failures();
    writeln!(
        out,
        "cells: {total} ({} ok, {failed} failed)",
        total - failed
    )?;
    let undefined: usize = output
        .records
        .iter()
        .filter_map(|r| r.result.as_ref().ok())
        .map(|c| c.undefined_runs)
        .sum();
    if undefined > 0 {
        writeln!(
            out,
            "runs with undefined metrics (excluded from means): {undefined}"
        )?;
    }
    writeln!(out)?;
    writeln!(out, "diagonal cells (mean over runs, population std):")?;
    for r in output.records.iter().filter(|r| r.is_diagonal()) {
        match &r.result {
            Ok(c) => writeln!(
                out,
                "  {:<14} {:<16} {:<10} {:<6}  auroc {:.3} ({:.3})  ap {:.3} ({:.3})",
                r.dataset,
                r.method,
                r.strategy.label(),
                r.test_g.label(),
                c.auroc,
                c.auroc_std,
                c.ap,
                c.ap_std
            )?,
            Err(e) => writeln!(
                out,
                "  {:<14} {:<16} {:<10} {:<6}  failed: {e}",
                r.dataset,
                r.method,
                r.strategy.label(),
                r.test_g.label()
            )?,
        }
    }
    writeln!(out)?;
    match &output.ranks {
        Ok(table) => {
            writeln!(out, "average AU-ROC rank over datasets (1 = best):")?;
            for ((s, g), col) in &table.columns {
                let line: Vec<String> = col.iter().map(|(m, r)| format!("{m} {r:.2}")).collect();
                writeln!(out, "  {}/{}: {}", g.label(), s.label(), line.join(", "))?;
            }
        }
        Err(e) => writeln!(out, "rank table unavailable: {e}")?,
    }
    for n in &output.notes {
        writeln!(out, "note: {n}")?;
    }
    for r in output.records.iter().filter(|r| r.result.is_err()) {
        if let Err(e) = &r.result {
            writeln!(
                out,
                "failed: {} {} {} {}->{}: {e}",
                r.dataset,
                r.method,
                r.strategy.label(),
                r.train_g.label(),
                r.test_g.label()
            )?;
        }
    }
    Ok(())
}

/// Writes results.csv, matrix.csv, ranks.csv, summary.txt and, when kept,
/// one negatives file per cell and run under `negatives/`.
pub fn emit_reports(
    dir: &Path,
    output: &MatrixOutput,
    granularities: &[Granularity],
    strategies: &[Strategy],
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();

    let path = dir.join("results.csv");
    write_results(create(&path)?, &result_rows(&output.records)).map_err(csv_err(&path))?;
    written.push(path);

    let path = dir.join("matrix.csv");
    write_matrix_csv(create(&path)?, &output.records).map_err(csv_err(&path))?;
    written.push(path);

    let path = dir.join("ranks.csv");
    let empty = RankTable::default();
    let table = output.ranks.as_ref().unwrap_or(&empty);
    write_ranks_csv(create(&path)?, table, granularities, strategies).map_err(csv_err(&path))?;
    written.push(path);

    let path = dir.join("summary.txt");
    let mut w = create(&path)?;
    write_summary(&mut w, output)
        .and_then(|_| w.flush())
        .map_err(|e| HarnessError::io(&path, e))?;
    written.push(path);

    if output.records.iter().any(|r| !r.negatives.is_empty()) {
        let neg_dir = dir.join("negatives");
        fs::create_dir_all(&neg_dir).map_err(|e| HarnessError::io(&neg_dir, e))?;
        for r in &output.records {
            for (run, batches) in r.negatives.iter().enumerate() {
                let path = neg_dir.join(format!(
                    "{}_{}_{}_{}-{}_run{run}.csv",
                    r.dataset,
                    r.method,
                    r.strategy.label(),
                    r.train_g.suffix(),
                    r.test_g.label()
                ));
                write_negatives(&path, r.strategy, batches)?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_header_is_granularity_major() {
        let table =
            RankTable::build([(Strategy::Random, Granularity::Second, "m", "d", 0.5)]).unwrap();
        let mut buf = Vec::new();
        write_ranks_csv(&mut buf, &table, &Granularity::PROTOCOL, &Strategy::ALL).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(header.len(), 13);
        assert_eq!(
            header[1..4],
            ["second_random", "second_historical", "second_inductive"]
        );
        assert_eq!(header[12], "day_inductive");
        assert!(lines.next().unwrap().starts_with("m,1.000,,"));
    }

    #[test]
    fn unwritable_dir_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain");
        fs::write(&file, "x").unwrap();
        assert!(matches!(
            ensure_writable(&file.join("sub")),
            Err(HarnessError::Io { .. })
        ));
    }
}
