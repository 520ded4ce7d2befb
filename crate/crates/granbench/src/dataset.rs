//! Loading edge lists from disk and the ingested-stream cache.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use granbench_core::ingest::{EdgeListFormat, StreamBuilder};
use granbench_core::EdgeStream;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::CACHE_DIR_ENV;

/// Parses an edge list file line by line.
pub fn load_edge_list(path: &Path, format: EdgeListFormat) -> Result<EdgeStream> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut reader = BufReader::with_capacity(1 << 20, file);
    let mut builder = StreamBuilder::new(format);
    let mut line = String::new();
    loop {
        line.clear();
        let n = reader
            .read_line(&mut line)
            .map_err(|e| HarnessError::io(path, e))?;
        if n == 0 {
            break;
        }
        builder.push_line(&line)?;
    }
    Ok(builder.finish()?)
}

/// Cache directory from the environment, or `.granbench-cache`.
pub fn cache_dir() -> PathBuf {
    std::env::var_os(CACHE_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(".granbench-cache"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheMeta {
    pub name: String,
    pub source: String,
    pub format: String,
    pub bipartite: bool,
    pub events: usize,
}

fn cache_paths(dir: &Path, name: &str) -> (PathBuf, PathBuf) {
    (
        dir.join(format!("{name}.csv")),
        dir.join(format!("{name}.json")),
    )
}

/// Writes `stream` to the cache in ingestion order so reloading keeps every
/// event's `seq`.
pub fn write_cache(
    dir: &Path,
    name: &str,
    source: &str,
    format: EdgeListFormat,
    stream: &EdgeStream,
) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let (csv_path, meta_path) = cache_paths(dir, name);
    let mut events = stream.events().to_vec();
    events.sort_unstable_by_key(|e| e.seq);
    let file = File::create(&csv_path).map_err(|e| HarnessError::io(&csv_path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| HarnessError::io(&csv_path, e);
    writeln!(w, "src,dst,t").map_err(io)?;
    for e in &events {
        writeln!(w, "{},{},{}", e.src, e.dst, e.t_orig).map_err(io)?;
    }
    w.flush().map_err(io)?;

    let meta = CacheMeta {
        name: name.to_string(),
        source: source.to_string(),
        format: format.label().to_string(),
        bipartite: stream.is_bipartite(),
        events: stream.len(),
    };
    let text = serde_json::to_string_pretty(&meta).map_err(|e| HarnessError::Json {
        path: meta_path.clone(),
        source: e,
    })?;
    fs::write(&meta_path, text).map_err(|e| HarnessError::io(&meta_path, e))?;
    Ok(csv_path)
}

pub fn read_cache(dir: &Path, name: &str) -> Result<EdgeStream> {
    let (csv_path, meta_path) = cache_paths(dir, name);
    let text = fs::read_to_string(&meta_path).map_err(|e| HarnessError::io(&meta_path, e))?;
    let meta: CacheMeta = serde_json::from_str(&text).map_err(|e| HarnessError::Json {
        path: meta_path.clone(),
        source: e,
    })?;
    let mut reader = csv::Reader::from_path(&csv_path).map_err(|e| HarnessError::Csv {
        path: csv_path.clone(),
        source: e,
    })?;
    let mut triples = Vec::with_capacity(meta.events);
    for row in reader.deserialize::<(u32, u32, i64)>() {
        triples.push(row.map_err(|e| HarnessError::Csv {
            path: csv_path.clone(),
            source: e,
        })?);
    }
    Ok(EdgeStream::from_triples(triples, meta.bipartite))
}

/// A dataset argument: a file path, or the name of a cached stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetRef {
    pub name: String,
    pub path: Option<PathBuf>,
    pub format: EdgeListFormat,
}

impl DatasetRef {
    pub fn parse(arg: &str, format: EdgeListFormat) -> Self {
        let path = Path::new(arg);
        if path.is_file() {
            DatasetRef {
                name: path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| arg.to_string()),
                path: Some(path.to_path_buf()),
                format,
            }
        } else {
            DatasetRef {
                name: arg.to_string(),
                path: None,
                format,
            }
        }
    }

    pub fn load(&self) -> Result<EdgeStream> {
        match &self.path {
            Some(p) => load_edge_list(p, self.format),
            None => {
                let dir = cache_dir();
                if !dir.join(format!("{}.json", self.name)).is_file() {
                    return Err(HarnessError::UnknownDataset(self.name.clone()));
                }
                read_cache(&dir, &self.name)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cache_roundtrip_keeps_seq_and_bipartite() {
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("j.csv");
        fs::write(
            &src,
            "user,item,ts,label,f\n1,0,50,0,0.1\n0,1,10,0,0.2\n1,1,10,0,0.3\n",
        )
        .unwrap();
        let s = load_edge_list(&src, EdgeListFormat::JodieCsv).unwrap();
        write_cache(dir.path(), "j", "j.csv", EdgeListFormat::JodieCsv, &s).unwrap();
        let back = read_cache(dir.path(), "j").unwrap();
        assert_eq!(back, s);
        assert!(back.is_bipartite());
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_edge_list(Path::new("/nonexistent/x.csv"), EdgeListFormat::PlainCsv);
        assert!(matches!(err, Err(HarnessError::Io { .. })));
    }
}
