#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use granbench_core::ingest::EdgeListFormat;
use granbench_core::SECONDS_PER_DAY;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` time-sorted events over `days` days: a core of recurring pairs plus
/// a steady trickle of new ones, with bursts of equal timestamps.
pub fn synthetic_triples(n: usize, days: i64, seed: u64) -> Vec<(u32, u32, i64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = days * SECONDS_PER_DAY;
    let mut times: Vec<i64> = (0..n).map(|_| rng.random_range(0..span)).collect();
    times.sort_unstable();
    // a few exact repeats so buckets at second granularity also collide
    for i in (1..n).step_by(17) {
        times[i] = times[i - 1];
    }
    times
        .into_iter()
        .map(|t| {
            let (src, dst) = if rng.random_bool(0.6) {
                (rng.random_range(0..40), rng.random_range(40..80))
            } else {
                (rng.random_range(0..400), rng.random_range(400..900))
            };
            (src, dst, 1_600_000_000 + t)
        })
        .collect()
}

pub fn plain_csv(triples: &[(u32, u32, i64)]) -> String {
    let mut s = String::from("src,dst,t\n");
    for (u, v, t) in triples {
        writeln!(s, "{u},{v},{t}").unwrap();
    }
    s
}

pub fn write_synthetic(dir: &Path, name: &str, n: usize, days: i64, seed: u64) -> PathBuf {
    let path = dir.join(format!("{name}.csv"));
    std::fs::write(&path, plain_csv(&synthetic_triples(n, days, seed))).unwrap();
    path
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_granbench")
}

/// Benchmark datasets as expected under `GRANBENCH_DATA_DIR`.
pub const DATASETS: [(&str, EdgeListFormat); 7] = [
    ("wikipedia", EdgeListFormat::JodieCsv),
    ("reddit", EdgeListFormat::JodieCsv),
    ("mooc", EdgeListFormat::JodieCsv),
    ("lastfm", EdgeListFormat::JodieCsv),
    ("enron", EdgeListFormat::PlainCsv),
    ("socialevo", EdgeListFormat::PlainCsv),
    ("uci", EdgeListFormat::PlainCsv),
];

pub const DATA_DIR_ENV: &str = "GRANBENCH_DATA_DIR";

pub fn data_dir() -> Option<PathBuf> {
    std::env::var_os(DATA_DIR_ENV).map(PathBuf::from)
}

pub fn dataset_path(name: &str) -> Option<PathBuf> {
    let p = data_dir()?.join(format!("{name}.csv"));
    p.is_file().then_some(p)
}

/// Prints one acceptance line.
pub fn report(criterion: u32, title: &str, passed: bool, detail: &str) {
    let verdict = if passed { "PASS" } else { "FAIL" };
    println!("\ncriterion {criterion:>2} [{title}]: {verdict} {detail}");
}
