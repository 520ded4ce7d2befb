//! Experiment configuration, read from JSON.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use granbench_core::edgebank::EdgeBankVariant;
use granbench_core::ingest::EdgeListFormat;
use granbench_core::negsampling::Strategy;
use granbench_core::split::Segment;
use granbench_core::stream::Granularity;
use serde::Deserialize;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub name: String,
    /// Edge list file. When absent, `name` is looked up in the cache.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default = "default_format")]
    pub format: String,
}

fn default_format() -> String {
    EdgeListFormat::PlainCsv.label().to_string()
}

impl DatasetEntry {
    pub fn format(&self) -> Result<EdgeListFormat> {
        EdgeListFormat::from_str(&self.format).map_err(HarnessError::Core)
    }
}

/// An external predictor run as a child process.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalMethod {
    pub name: String,
    /// Program followed by its arguments.
    pub command: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum MethodSpec {
    Builtin(String),
    External(ExternalMethod),
}

/// A resolved method.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Method {
    EdgeBank(EdgeBankVariant),
    External(ExternalMethod),
}

impl Method {
    pub fn name(&self) -> &str {
        match self {
            Method::EdgeBank(v) => v.method_name(),
            Method::External(e) => &e.name,
        }
    }

    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "edgebank_inf" => Ok(Method::EdgeBank(EdgeBankVariant::Infinity)),
            "edgebank_tw" => Ok(Method::EdgeBank(EdgeBankVariant::TimeWindow)),
            other => Err(HarnessError::Config(format!(
                "unknown method `{other}` (expected edgebank_inf, edgebank_tw or an external plug-in)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub datasets: Vec<DatasetEntry>,
    #[serde(default = "default_granularities")]
    pub granularities: Vec<String>,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<String>,
    pub methods: Vec<MethodSpec>,
    #[serde(default = "default_runs")]
    pub runs: u32,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    pub output_dir: PathBuf,
    #[serde(default = "default_segment")]
    pub segment: String,
    #[serde(default)]
    pub dump_negatives: bool,
    /// Worker threads; 0 uses one per core.
    #[serde(default)]
    pub workers: usize,
}

fn default_granularities() -> Vec<String> {
    Granularity::PROTOCOL
        .iter()
        .map(|g| g.label().to_string())
        .collect()
}

fn default_strategies() -> Vec<String> {
    Strategy::ALL
        .iter()
        .map(|s| s.label().to_string())
        .collect()
}

fn default_runs() -> u32 {
    3
}

fn default_batch_size() -> usize {
    200
}

fn default_segment() -> String {
    "test".into()
}

/// A validated experiment configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetEntry>,
    pub granularities: Vec<Granularity>,
    pub strategies: Vec<Strategy>,
    pub methods: Vec<Method>,
    pub runs: u32,
    pub master_seed: u64,
    pub batch_size: usize,
    pub output_dir: PathBuf,
    pub segment: Segment,
    pub dump_negatives: bool,
    pub workers: usize,
}

fn parse_all<T: FromStr<Err = granbench_core::Error>>(
    what: &str,
    items: &[String],
) -> Result<Vec<T>> {
    if items.is_empty() {
        return Err(HarnessError::Config(format!("{what} must not be empty")));
    }
    items
        .iter()
        .map(|s| T::from_str(s).map_err(HarnessError::Core))
        .collect()
}

fn reject_duplicates<'a, I: IntoIterator<Item = &'a str>>(what: &str, names: I) -> Result<()> {
    let mut seen = std::collections::BTreeSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(HarnessError::Config(format!("duplicate {what} `{n}`")));
        }
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_raw(raw: RawConfig) -> Result<Self> {
        if raw.runs == 0 {
            return Err(HarnessError::Config("runs must be at least 1".into()));
        }
        if raw.batch_size == 0 {
            return Err(HarnessError::Config("batch_size must be at least 1".into()));
        }
        if raw.datasets.is_empty() {
            return Err(HarnessError::Config("datasets must not be empty".into()));
        }
        if raw.methods.is_empty() {
            return Err(HarnessError::Config("methods must not be empty".into()));
        }
        let granularities: Vec<Granularity> = parse_all("granularities", &raw.granularities)?;
        if let Some(g) = granularities
            .iter()
            .find(|g| !Granularity::PROTOCOL.contains(g))
        {
            return Err(HarnessError::Config(format!(
                "granularity `{g}` is not one of second, minute, hour, day"
            )));
        }
        let strategies = parse_all("strategies", &raw.strategies)?;
        let methods = raw
            .methods
            .into_iter()
            .map(|m| match m {
                MethodSpec::Builtin(name) => Method::builtin(&name),
                MethodSpec::External(e) if e.command.is_empty() => Err(HarnessError::Config(
                    format!("external method `{}` has an empty command", e.name),
                )),
                MethodSpec::External(e) => Ok(Method::External(e)),
            })
            .collect::<Result<Vec<_>>>()?;
        let segment = Segment::from_str(&raw.segment)?;
        if segment == Segment::Train {
            return Err(HarnessError::Config("segment must be val or test".into()));
        }
        for d in &raw.datasets {
            d.format()?;
        }
        reject_duplicates("dataset", raw.datasets.iter().map(|d| d.name.as_str()))?;
        reject_duplicates("method", methods.iter().map(Method::name))?;
        reject_duplicates("granularity", granularities.iter().map(|g| g.label()))?;
        reject_duplicates("strategy", strategies.iter().map(|s: &Strategy| s.label()))?;

        Ok(ExperimentConfig {
            datasets: raw.datasets,
            granularities,
            strategies,
            methods,
            runs: raw.runs,
            master_seed: raw.master_seed,
            batch_size: raw.batch_size,
            output_dir: raw.output_dir,
            segment,
            dump_negatives: raw.dump_negatives,
            workers: raw.workers,
        })
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, ConfigLoadError> {
        let raw: RawConfig = serde_json::from_str(text).map_err(ConfigLoadError::Json)?;
        Self::from_raw(raw).map_err(ConfigLoadError::Invalid)
    }

    /// Reads a config file. Relative dataset and output paths are resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut cfg = Self::from_json(&text).map_err(|e| match e {
            ConfigLoadError::Json(source) => HarnessError::Json {
                path: path.to_path_buf(),
                source,
            },
            ConfigLoadError::Invalid(e) => e,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for d in &mut cfg.datasets {
            if let Some(p) = &mut d.path {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }
}

#[derive(Debug)]
pub enum ConfigLoadError {
    Json(serde_json::Error),
    Invalid(HarnessError),
}
