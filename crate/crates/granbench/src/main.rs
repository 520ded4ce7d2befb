use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use granbench::config::{ExperimentConfig, ExternalMethod, Method};
use granbench::dataset::{cache_dir, write_cache, DatasetRef};
use granbench::formats::{
    read_negatives, read_results, write_negatives, write_results, write_split_manifest,
    write_stats, ResultRow,
};
use granbench::matrix::{
    prepare_datasets, rank_tables, run_cells, run_matrix, CellRecord, CellSpec, PreparedDataset,
    RunSettings,
};
use granbench::report::{emit_reports, ensure_writable, result_rows, write_ranks_csv};
use granbench::CACHE_DIR_ENV;
use granbench_core::ingest::EdgeListFormat;
use granbench_core::negsampling::Strategy;
use granbench_core::split::{
    chronological_counts, compute_boundaries, split, ChronoRatios, Segment,
};
use granbench_core::stream::Granularity;
use granbench_core::RankTable;

fn parse_with<T: FromStr>(s: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    T::from_str(s).map_err(|e| e.to_string())
}

/// Time-granularity benchmarking for dynamic link prediction.
#[derive(Parser)]
#[command(name = "granbench", version)]
struct Cli {
    /// Directory for ingested streams.
    #[arg(long, global = true, env = CACHE_DIR_ENV)]
    cache_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitMode {
    Day,
    Chrono,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an edge list and store it in the cache.
    Ingest {
        path: PathBuf,
        #[arg(long, default_value = "plain_csv", value_parser = parse_with::<EdgeListFormat>)]
        format: EdgeListFormat,
        /// Cache name; defaults to the file stem.
        #[arg(long)]
        name: Option<String>,
    },
    /// Print dataset statistics as CSV.
    Stats {
        /// Edge list files or cached names.
        #[arg(required = true)]
        datasets: Vec<String>,
        #[arg(long, default_value = "plain_csv", value_parser = parse_with::<EdgeListFormat>)]
        format: EdgeListFormat,
        /// Granularity at which unique steps are counted.
        #[arg(long, default_value = "second", value_parser = parse_with::<Granularity>)]
        granularity: Granularity,
    },
    /// Split a dataset and report per-segment counts.
    Split {
        dataset: String,
        #[arg(long, default_value = "plain_csv", value_parser = parse_with::<EdgeListFormat>)]
        format: EdgeListFormat,
        #[arg(long, value_enum, default_value = "day")]
        mode: SplitMode,
        #[arg(long, default_value = "second", value_parser = parse_with::<Granularity>)]
        granularity: Granularity,
        /// Where to write the manifest (day mode only).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Evaluate one (train, test) granularity cell.
    Eval {
        #[arg(long)]
        dataset: String,
        #[arg(long, default_value = "plain_csv", value_parser = parse_with::<EdgeListFormat>)]
        format: EdgeListFormat,
        /// edgebank_inf, edgebank_tw, or a plug-in name whose command follows `--`.
        #[arg(long)]
        method: String,
        /// Plug-in command line, after `--`.
        #[arg(last = true)]
        command: Vec<String>,
        #[arg(long, value_parser = parse_with::<Granularity>)]
        train_gran: Granularity,
        #[arg(long, value_parser = parse_with::<Granularity>)]
        test_gran: Granularity,
        #[arg(long, default_value = "random", value_parser = parse_with::<Strategy>)]
        strategy: Strategy,
        #[arg(long, default_value_t = 3)]
        runs: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        batch_size: usize,
        #[arg(long, default_value = "test", value_parser = parse_with::<Segment>)]
        segment: Segment,
        /// Write the negatives of each run to this directory.
        #[arg(long)]
        dump_negatives: Option<PathBuf>,
        /// Replay a negatives dump instead of sampling.
        #[arg(long)]
        negatives: Option<PathBuf>,
        /// Write results.csv here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a full experiment grid from a JSON config.
    Matrix {
        #[arg(long)]
        config: PathBuf,
    },
    /// Average ranks from a results file, over matched-granularity cells.
    Rank {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(dir) = &cli.cache_dir {
        std::env::set_var(CACHE_DIR_ENV, dir);
    }
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Ok(false) when the command completed but some cell failed.
fn run(command: Command) -> anyhow::Result<bool> {
    match command {
        Command::Ingest { path, format, name } => ingest(&path, format, name),
        Command::Stats {
            datasets,
            format,
            granularity,
        } => stats(&datasets, format, granularity),
        Command::Split {
            dataset,
            format,
            mode,
            granularity,
            out_dir,
        } => split_cmd(&dataset, format, mode, granularity, out_dir.as_deref()),
        Command::Eval {
            dataset,
            format,
            method,
            command,
            train_gran,
            test_gran,
            strategy,
            runs,
            seed,
            batch_size,
            segment,
            dump_negatives,
            negatives,
            out,
        } => {
            let method = if command.is_empty() {
                Method::builtin(&method)?
            } else {
                Method::External(ExternalMethod {
                    name: method,
                    command,
                })
            };
            eval(EvalArgs {
                dataset: DatasetRef::parse(&dataset, format),
                method,
                train_gran,
                test_gran,
                strategy,
                runs,
                seed,
                batch_size,
                segment,
                dump_negatives,
                negatives,
                out,
            })
        }
        Command::Matrix { config } => matrix(&config),
        Command::Rank { input, out } => rank(&input, out.as_deref()),
    }
}

fn ingest(path: &Path, format: EdgeListFormat, name: Option<String>) -> anyhow::Result<bool> {
    let dataset = DatasetRef::parse(&path.to_string_lossy(), format);
    if dataset.path.is_none() {
        bail!("{} is not a file", path.display());
    }
    let stream = dataset.load()?;
    let name = name.unwrap_or(dataset.name);
    let dir = cache_dir();
    let cached = write_cache(&dir, &name, &path.to_string_lossy(), format, &stream)?;
    let st = stream.stats()?;
    println!(
        "{name}: {} events, {} nodes, {} unique edges -> {}",
        st.total_edges,
        st.num_nodes,
        st.unique_edges,
        cached.display()
    );
    Ok(true)
}

fn stats(datasets: &[String], format: EdgeListFormat, g: Granularity) -> anyhow::Result<bool> {
    let mut rows = Vec::with_capacity(datasets.len());
    for arg in datasets {
        let d = DatasetRef::parse(arg, format);
        let stream = d.load()?.coarsen(g)?;
        rows.push((d.name, stream.stats()?));
    }
    write_stats(io::stdout().lock(), &rows)?;
    Ok(true)
}

fn split_cmd(
    dataset: &str,
    format: EdgeListFormat,
    mode: SplitMode,
    g: Granularity,
    out_dir: Option<&Path>,
) -> anyhow::Result<bool> {
    let raw = DatasetRef::parse(dataset, format).load()?;
    let stream = raw.coarsen(g)?;
    let mut out = io::stdout().lock();
    match mode {
        SplitMode::Day => {
            let b = compute_boundaries(&raw)?;
            let d = split(&stream, &b)?;
            writeln!(out, "split,days,n_events,n_steps")?;
            for seg in Segment::ALL {
                let (start, end) = b.day_range(seg);
                let c = d.counts(seg);
                writeln!(
                    out,
                    "{},{},{},{}",
                    seg.label(),
                    end - start,
                    c.events,
                    c.steps
                )?;
            }
            if let Some(dir) = out_dir {
                fs::create_dir_all(dir).with_context(|| dir.display().to_string())?;
                write_split_manifest(dir, &d)?;
            }
        }
        SplitMode::Chrono => {
            if out_dir.is_some() {
                bail!("--out-dir is only supported with --mode day");
            }
            let c = chronological_counts(&stream, ChronoRatios::default())?;
            writeln!(out, "split,n_events")?;
            writeln!(out, "train,{}", c.train)?;
            writeln!(out, "val,{}", c.val)?;
            writeln!(out, "test,{}", c.test)?;
            if c.has_empty_segment() {
                eprintln!(
                    "warning: at {} granularity the chronological split leaves a segment empty \
                     (train {}, val {}, test {})",
                    g.label(),
                    c.train,
                    c.val,
                    c.test
                );
            }
        }
    }
    Ok(true)
}

struct EvalArgs {
    dataset: DatasetRef,
    method: Method,
    train_gran: Granularity,
    test_gran: Granularity,
    strategy: Strategy,
    runs: u32,
    seed: u64,
    batch_size: usize,
    segment: Segment,
    dump_negatives: Option<PathBuf>,
    negatives: Option<PathBuf>,
    out: Option<PathBuf>,
}

fn eval(a: EvalArgs) -> anyhow::Result<bool> {
    if a.runs == 0 {
        bail!("--runs must be at least 1");
    }
    if a.segment == Segment::Train {
        bail!("--segment must be val or test");
    }
    if let Some(dir) = &a.dump_negatives {
        ensure_writable(dir)?;
    }
    if let Some(path) = &a.out {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            ensure_writable(parent)?;
        }
    }
    let pinned = match &a.negatives {
        Some(p) => Some(Arc::new(read_negatives(p)?)),
        None => None,
    };
    let raw = a.dataset.load()?;
    let mut grans = vec![a.train_gran];
    if a.test_gran != a.train_gran {
        grans.push(a.test_gran);
    }
    let ds = PreparedDataset::new(&a.dataset.name, &raw, &grans, a.segment)?;
    let spec = CellSpec {
        dataset: 0,
        method: 0,
        strategy: a.strategy,
        train_g: a.train_gran,
        test_g: a.test_gran,
    };
    let settings = RunSettings {
        runs: a.runs,
        master_seed: a.seed,
        batch_size: a.batch_size,
        keep_negatives: a.dump_negatives.is_some(),
        pinned,
        workers: 1,
    };
    let records = run_cells(&[ds], &[a.method], &[spec], &settings)?;
    let rows = result_rows(&records);
    match &a.out {
        Some(p) => {
            let f = File::create(p).with_context(|| p.display().to_string())?;
            write_results(BufWriter::new(f), &rows)?;
        }
        None => write_results(io::stdout().lock(), &rows)?,
    }
    if let Some(dir) = &a.dump_negatives {
        write_eval_negatives(dir, &records)?;
    }
    Ok(report_failures(&records))
}

fn write_eval_negatives(dir: &Path, records: &[CellRecord]) -> anyhow::Result<()> {
    for r in records {
        for (run, batches) in r.negatives.iter().enumerate() {
            let path = dir.join(format!("negatives_run{run}.csv"));
            write_negatives(&path, r.strategy, batches)?;
        }
    }
    Ok(())
}

fn report_failures(records: &[CellRecord]) -> bool {
    let mut ok = true;
    for r in records {
        if let Err(e) = &r.result {
            eprintln!(
                "cell failed: {} {} {} {}->{}: {e}",
                r.dataset,
                r.method,
                r.strategy.label(),
                r.train_g.label(),
                r.test_g.label()
            );
            ok = false;
        }
    }
    ok
}

fn matrix(config: &Path) -> anyhow::Result<bool> {
    let cfg = ExperimentConfig::load(config)?;
    ensure_writable(&cfg.output_dir)?;
    let datasets = prepare_datasets(&cfg)?;
    let output = run_matrix(&cfg, &datasets)?;
    emit_reports(
        &cfg.output_dir,
        &output,
        &cfg.granularities,
        &cfg.strategies,
    )?;
    let failed = output.failures();
    println!(
        "{} cells, {failed} failed; reports in {}",
        output.records.len(),
        cfg.output_dir.display()
    );
    Ok(report_failures(&output.records))
}

fn rank(input: &Path, out: Option<&Path>) -> anyhow::Result<bool> {
    let rows = read_results(input)?;
    let table = rank_from_rows(&rows)?;
    let grans: Vec<Granularity> = Granularity::PROTOCOL
        .into_iter()
        .filter(|g| rows.iter().any(|r| r.test_gran == *g))
        .collect();
    let strategies: Vec<Strategy> = Strategy::ALL
        .into_iter()
        .filter(|s| rows.iter().any(|r| r.strategy == *s))
        .collect();
    match out {
        Some(p) => {
            let f = File::create(p).with_context(|| p.display().to_string())?;
            write_ranks_csv(BufWriter::new(f), &table, &grans, &strategies)?;
        }
        None => write_ranks_csv(io::stdout().lock(), &table, &grans, &strategies)?,
    }
    Ok(true)
}

fn rank_from_rows(rows: &[ResultRow]) -> anyhow::Result<RankTable> {
    let records: Vec<CellRecord> = rows
        .iter()
        .map(|r| CellRecord {
            dataset: r.dataset.clone(),
            method: r.method.clone(),
            strategy: r.strategy,
            train_g: r.train_gran,
            test_g: r.test_gran,
            result: Ok(granbench_core::EvalCell {
                auroc: r.auroc,
                auroc_std: r.auroc_std,
                ap: r.ap,
                ap_std: r.ap_std,
                n_pos: r.n_pos,
                n_neg: r.n_neg,
                fallback_fraction: r.fallback_frac,
                runs: 1,
                undefined_runs: 0,
            }),
            negatives: Vec::new(),
        })
        .collect();
    let (table, notes) = rank_tables(&records);
    for n in notes {
        eprintln!("note: {n}");
    }
    Ok(table?)
}
