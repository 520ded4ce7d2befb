//! The experiment grid: datasets x methods x strategies x (train, test)
//! granularity pairs x runs.
//!
//! Every cell of a dataset reuses one set of split boundaries computed from
//! the raw stream. Cells run on a bounded rayon pool; each run owns its
//! predictor and an RNG seeded from the cell's identity, so the results do
//! not depend on scheduling.

use std::collections::BTreeMap;
use std::sync::Arc;

use granbench_core::edgebank::{EdgeBank, LinkPredictor};
use granbench_core::negsampling::{
    build_pools, derive_seed, BatchNegatives, NegativePools, NegativeSource, PinnedNegatives,
    PoolSampler, SamplerConfig, Strategy,
};
use granbench_core::pipeline::{run_cell, CellOptions};
use granbench_core::split::{
    compute_boundaries, split, verify_no_leakage, DatasetSplit, Segment, SplitBoundaries,
};
use granbench_core::stream::{EdgeStream, Granularity};
use granbench_core::{EvalCell, RankTable};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Method};
use crate::dataset::{cache_dir, load_edge_list, read_cache};
use crate::error::{HarnessError, Result};
use crate::plugin::SubprocessPredictor;

/// A dataset split once per granularity at shared boundaries.
#[derive(Debug, Clone)]
pub struct PreparedDataset {
    pub name: String,
    pub boundaries: SplitBoundaries,
    splits: BTreeMap<Granularity, DatasetSplit>,
    pools: NegativePools,
    segment: Segment,
}

impl PreparedDataset {
    pub fn new(
        name: &str,
        raw: &EdgeStream,
        granularities: &[Granularity],
        segment: Segment,
    ) -> Result<Self> {
        let boundaries = compute_boundaries(raw)?;
        let mut list = Vec::with_capacity(granularities.len());
        for &g in granularities {
            list.push(split(&raw.coarsen(g)?, &boundaries)?);
        }
        let report = verify_no_leakage(&list);
        if let Some(v) = report.violation {
            return Err(HarnessError::Config(format!(
                "{name}: split check failed: {v}"
            )));
        }
        let first = list
            .first()
            .ok_or_else(|| HarnessError::Config("no granularities requested".into()))?;
        // pools hold distinct (src, dst) pairs, which coarsening never changes
        let pools = build_pools(first, segment)?;
        let splits = granularities.iter().copied().zip(list).collect();
        Ok(PreparedDataset {
            name: name.to_string(),
            boundaries,
            splits,
            pools,
            segment,
        })
    }

    pub fn split_at(&self, g: Granularity) -> Option<&DatasetSplit> {
        self.splits.get(&g)
    }

    pub fn pools(&self) -> &NegativePools {
        &self.pools
    }

    pub fn segment(&self) -> Segment {
        self.segment
    }
}

/// Loads and prepares every dataset of `cfg`, in config order.
pub fn prepare_datasets(cfg: &ExperimentConfig) -> Result<Vec<PreparedDataset>> {
    cfg.datasets
        .iter()
        .map(|d| {
            let raw = match &d.path {
                Some(p) => load_edge_list(p, d.format()?)?,
                None => {
                    let dir = cache_dir();
                    if !dir.join(format!("{}.json", d.name)).is_file() {
                        return Err(HarnessError::UnknownDataset(d.name.clone()));
                    }
                    read_cache(&dir, &d.name)?
                }
            };
            PreparedDataset::new(&d.name, &raw, &cfg.granularities, cfg.segment)
        })
        .collect()
}

/// One cell of the grid, by index into the dataset and method lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellSpec {
    pub dataset: usize,
    pub method: usize,
    pub strategy: Strategy,
    pub train_g: Granularity,
    pub test_g: Granularity,
}

/// All cells of `cfg` in report order: dataset, method, strategy, train
/// granularity, test granularity.
pub fn plan_cells(cfg: &ExperimentConfig) -> Vec<CellSpec> {
    let mut cells = Vec::new();
    for dataset in 0..cfg.datasets.len() {
        for method in 0..cfg.methods.len() {
            for &strategy in &cfg.strategies {
                for &train_g in &cfg.granularities {
                    for &test_g in &cfg.granularities {
                        cells.push(CellSpec {
                            dataset,
                            method,
                            strategy,
                            train_g,
                            test_g,
                        });
                    }
                }
            }
        }
    }
    cells
}

#[derive(Debug, Clone)]
pub struct RunSettings {
    pub runs: u32,
    pub master_seed: u64,
    pub batch_size: usize,
    pub keep_negatives: bool,
    /// When set, every run replays these negatives instead of sampling.
    pub pinned: Option<Arc<Vec<BatchNegatives>>>,
    pub workers: usize,
}

impl RunSettings {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        RunSettings {
            runs: cfg.runs,
            master_seed: cfg.master_seed,
            batch_size: cfg.batch_size,
            keep_negatives: cfg.dump_negatives,
            pinned: None,
            workers: cfg.workers,
        }
    }
}

/// Outcome of one cell across all its runs.
#[derive(Debug, Clone)]
pub struct CellRecord {
    pub dataset: String,
    pub method: String,
    pub strategy: Strategy,
    pub train_g: Granularity,
    pub test_g: Granularity,
    pub result: std::result::Result<EvalCell, String>,
    /// Per run, when negatives are kept.
    pub negatives: Vec<Vec<BatchNegatives>>,
}

impl CellRecord {
    pub fn is_diagonal(&self) -> bool {
        self.train_g == self.test_g
    }
}

fn make_predictor(method: &Method) -> Result<Box<dyn LinkPredictor>> {
    Ok(match method {
        Method::EdgeBank(v) => Box::new(EdgeBank::new(*v)),
        Method::External(e) => Box::new(SubprocessPredictor::spawn(e)?),
    })
}

fn run_spec(
    ds: &PreparedDataset,
    method: &Method,
    spec: &CellSpec,
    settings: &RunSettings,
) -> (
    std::result::Result<EvalCell, String>,
    Vec<Vec<BatchNegatives>>,
) {
    let (Some(history), Some(eval)) = (ds.split_at(spec.train_g), ds.split_at(spec.test_g)) else {
        return (
            Err("granularity not prepared for this dataset".into()),
            Vec::new(),
        );
    };
    let opts = CellOptions {
        segment: ds.segment(),
        batch_size: settings.batch_size,
    };
    let mut runs = Vec::with_capacity(settings.runs as usize);
    let mut kept = Vec::new();
    for run in 0..settings.runs {
        let outcome = (|| -> Result<_> {
            let mut predictor = make_predictor(method)?;
            let mut source: Box<dyn NegativeSource> = match &settings.pinned {
                Some(p) => Box::new(PinnedNegatives::new(p.as_ref().clone())),
                None => {
                    let seed = derive_seed(
                        settings.master_seed,
                        &ds.name,
                        spec.train_g,
                        spec.test_g,
                        spec.strategy,
                        run,
                    );
                    let mut cfg = SamplerConfig::new(spec.strategy, seed);
                    cfg.batch_size = settings.batch_size;
                    Box::new(PoolSampler::new(ds.pools().clone(), cfg)?)
                }
            };
            Ok(run_cell(
                history,
                eval,
                predictor.as_mut(),
                source.as_mut(),
                &opts,
            )?)
        })();
        match outcome {
            Ok(o) => {
                if settings.keep_negatives {
                    kept.push(o.negatives);
                }
                runs.push(o.metrics);
            }
            Err(e) => return (Err(format!("run {run}: {e}")), kept),
        }
    }
    (EvalCell::from_runs(&runs).map_err(|e| e.to_string()), kept)
}

/// Runs `specs` on a pool of `settings.workers` threads (0 = one per core).
/// Records come back in `specs` order.
pub fn run_cells(
    datasets: &[PreparedDataset],
    methods: &[Method],
    specs: &[CellSpec],
    settings: &RunSettings,
) -> Result<Vec<CellRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.workers)
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start worker pool: {e}")))?;
    let records = pool.install(|| {
        specs
            .par_iter()
            .map(|spec| {
                let ds = &datasets[spec.dataset];
                let method = &methods[spec.method];
                let (result, negatives) = run_spec(ds, method, spec, settings);
                CellRecord {
                    dataset: ds.name.clone(),
                    method: method.name().to_string(),
                    strategy: spec.strategy,
                    train_g: spec.train_g,
                    test_g: spec.test_g,
                    result,
                    negatives,
                }
            })
            .collect()
    });
    Ok(records)
}

type GridKey = (String, String, Strategy);
type Grid = BTreeMap<(Granularity, Granularity), std::result::Result<EvalCell, String>>;

/// Per (dataset, method, strategy), the cells indexed by (train, test)
/// granularity.
#[derive(Debug, Clone, Default)]
pub struct CrossGranMatrix {
    pub grids: BTreeMap<GridKey, Grid>,
}

impl CrossGranMatrix {
    pub fn from_records(records: &[CellRecord]) -> Self {
        let mut grids: BTreeMap<GridKey, Grid> = BTreeMap::new();
        for r in records {
            grids
                .entry((r.dataset.clone(), r.method.clone(), r.strategy))
                .or_default()
                .insert((r.train_g, r.test_g), r.result.clone());
        }
        CrossGranMatrix { grids }
    }

    pub fn get(
        &self,
        dataset: &str,
        method: &str,
        strategy: Strategy,
        train_g: Granularity,
        test_g: Granularity,
    ) -> Option<&std::result::Result<EvalCell, String>> {
        self.grids
            .get(&(dataset.to_string(), method.to_string(), strategy))?
            .get(&(train_g, test_g))
    }
}

/// Rank tables over diagonal cells, by AU-ROC.
///
/// A dataset enters a column only if every method succeeded on it there;
/// each omission is listed in the returned notes.
pub fn rank_tables(records: &[CellRecord]) -> (Result<RankTable>, Vec<String>) {
    let mut methods: Vec<&str> = records.iter().map(|r| r.method.as_str()).collect();
    methods.sort_unstable();
    methods.dedup();

    type Column<'a> = (Strategy, Granularity, &'a str);
    let mut by_column: BTreeMap<Column<'_>, Vec<(&str, f64)>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.is_diagonal()) {
        let entry = by_column
            .entry((r.strategy, r.test_g, r.dataset.as_str()))
            .or_default();
        if let Ok(cell) = &r.result {
            entry.push((r.method.as_str(), cell.auroc));
        }
    }

    let mut notes = Vec::new();
    let mut entries = Vec::new();
    for ((strategy, g, dataset), values) in &by_column {
        if values.len() != methods.len() {
            notes.push(format!(
                "{dataset} left out of the {}/{} rank column: not every method produced a result",
                g.label(),
                strategy.label()
            ));
            continue;
        }
        entries.extend(values.iter().map(|&(m, v)| (*strategy, *g, m, *dataset, v)));
    }
    (RankTable::build(entries).map_err(HarnessError::Core), notes)
}

/// Everything one matrix invocation produces.
#[derive(Debug)]
pub struct MatrixOutput {
    pub records: Vec<CellRecord>,
    pub matrix: CrossGranMatrix,
    pub ranks: Result<RankTable>,
    pub notes: Vec<String>,
}

impl MatrixOutput {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.result.is_err()).count()
    }
}

pub fn run_matrix(cfg: &ExperimentConfig, datasets: &[PreparedDataset]) -> Result<MatrixOutput> {
    let specs = plan_cells(cfg);
    let records = run_cells(
        datasets,
        &cfg.methods,
        &specs,
        &RunSettings::from_config(cfg),
    )?;
    let matrix = CrossGranMatrix::from_records(&records);
    let (ranks, notes) = rank_tables(&records);
    Ok(MatrixOutput {
        records,
        matrix,
        ranks,
        notes,
    })
}
