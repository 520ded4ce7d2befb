//! AU-ROC, average precision and rank aggregation.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::negsampling::Strategy;
use crate::stream::Granularity;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredSample {
    pub score: f64,
    pub positive: bool,
}

impl ScoredSample {
    pub fn positive(score: f64) -> Self {
        ScoredSample {
            score,
            positive: true,
        }
    }

    pub fn negative(score: f64) -> Self {
        ScoredSample {
            score,
            positive: false,
        }
    }
}

fn class_counts(samples: &[ScoredSample]) -> Result<(usize, usize)> {
    if samples.iter().any(|s| !s.score.is_finite()) {
        return Err(Error::UndefinedMetric("non-finite score"));
    }
    let n_pos = samples.iter().filter(|s| s.positive).count();
    Ok((n_pos, samples.len() - n_pos))
}

/// Area under the ROC curve via the Mann-Whitney rank statistic, with tied
/// scores sharing their average rank.
pub fn auroc(samples: &[ScoredSample]) -> Result<f64> {
    let (n_pos, n_neg) = class_counts(samples)?;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric("AU-ROC needs both classes"));
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_unstable_by(|&a, &b| samples[a].score.total_cmp(&samples[b].score));

    let mut pos_rank_sum = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let score = samples[order[i]].score;
        let mut j = i;
        let mut pos_in_group = 0usize;
        while j < order.len() && samples[order[j]].score == score {
            pos_in_group += samples[order[j]].positive as usize;
            j += 1;
        }
        // ranks i+1 ..= j share their mean
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        pos_rank_sum += avg_rank * pos_in_group as f64;
        i = j;
    }
    let n_pos_f = n_pos as f64;
    Ok((pos_rank_sum - n_pos_f * (n_pos_f + 1.0) / 2.0) / (n_pos_f * n_neg as f64))
}

/// Mean precision at the rank of each positive.
///
/// Samples are ordered by descending score; among equal scores negatives
/// come first, so tied binary scores are never credited optimistically.
pub fn average_precision(samples: &[ScoredSample]) -> Result<f64> {
    let (n_pos, _) = class_counts(samples)?;
    if n_pos == 0 {
        return Err(Error::UndefinedMetric("average precision needs a positive"));
    }
    let mut sorted: Vec<&ScoredSample> = samples.iter().collect();
    sorted.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.positive.cmp(&b.positive))
    });
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (k, s) in sorted.iter().enumerate() {
        if s.positive {
            hits += 1;
            sum += hits as f64 / (k + 1) as f64;
        }
    }
    Ok(sum / n_pos as f64)
}

/// Metrics of one evaluation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMetrics {
    pub auroc: f64,
    pub ap: f64,
    pub n_pos: usize,
    pub n_neg: usize,
    pub fallback_fraction: f64,
}

impl RunMetrics {
    pub fn from_samples(samples: &[ScoredSample], fallback: usize) -> Result<Self> {
        let (n_pos, n_neg) = class_counts(samples)?;
        Ok(RunMetrics {
            auroc: auroc(samples)?,
            ap: average_precision(samples)?,
            n_pos,
            n_neg,
            fallback_fraction: if n_neg == 0 {
                0.0
            } else {
                fallback as f64 / n_neg as f64
            },
        })
    }
}

/// Mean and population standard deviation over runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalCell {
    pub auroc: f64,
    pub auroc_std: f64,
    pub ap: f64,
    pub ap_std: f64,
    pub n_pos: usize,
    pub n_neg: usize,
    pub fallback_fraction: f64,
    pub runs: usize,
    /// Runs whose metrics were undefined and left out of the means.
    pub undefined_runs: usize,
}

impl EvalCell {
    /// Aggregates runs; undefined runs are counted, not averaged.
    pub fn from_runs(runs: &[Result<RunMetrics>]) -> Result<Self> {
        let ok: Vec<&RunMetrics> = runs.iter().filter_map(|r| r.as_ref().ok()).collect();
        let undefined_runs = runs.len() - ok.len();
        let first = ok
            .first()
            .ok_or(Error::UndefinedMetric("no run produced defined metrics"))?;
        let (auroc, auroc_std) = mean_std(ok.iter().map(|r| r.auroc));
        let (ap, ap_std) = mean_std(ok.iter().map(|r| r.ap));
        let (fallback_fraction, _) = mean_std(ok.iter().map(|r| r.fallback_fraction));
        Ok(EvalCell {
            auroc,
            auroc_std,
            ap,
            ap_std,
            n_pos: first.n_pos,
            n_neg: first.n_neg,
            fallback_fraction,
            runs: ok.len(),
            undefined_runs,
        })
    }
}

/// Mean and population standard deviation.
pub fn mean_std<I: IntoIterator<Item = f64>>(values: I) -> (f64, f64) {
    let values: Vec<f64> = values.into_iter().collect();
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, libm::sqrt(var))
}

/// Ranks for descending `values` (1 = best), ties sharing their average.
pub fn rank_descending(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(Ordering::Equal));
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

/// Mean rank of each method across datasets, from `(method, dataset)`
/// keyed metric values where higher is better.
pub fn average_rank(results: &BTreeMap<(String, String), f64>) -> Result<BTreeMap<String, f64>> {
    let mut methods: Vec<&String> = results.keys().map(|(m, _)| m).collect();
    methods.dedup();
    let mut datasets: Vec<&String> = results.keys().map(|(_, d)| d).collect();
    datasets.sort();
    datasets.dedup();

    let mut totals: BTreeMap<String, f64> = methods.iter().map(|m| ((*m).clone(), 0.0)).collect();
    for dataset in &datasets {
        let mut values = Vec::with_capacity(methods.len());
        for method in &methods {
            let v = results
                .get(&((*method).clone(), (*dataset).clone()))
                .ok_or_else(|| Error::IncompleteTable {
                    method: (*method).clone(),
                    dataset: (*dataset).clone(),
                })?;
            if !v.is_finite() {
                return Err(Error::UndefinedMetric("non-finite value in rank table"));
            }
            values.push(*v);
        }
        for (method, rank) in methods.iter().zip(rank_descending(&values)) {
            *totals.get_mut(*method).expect("method present") += rank;
        }
    }
    let n = datasets.len() as f64;
    Ok(totals.into_iter().map(|(m, t)| (m, t / n)).collect())
}

/// Average ranks per `(strategy, granularity)` column.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RankTable {
    pub columns: BTreeMap<(Strategy, Granularity), BTreeMap<String, f64>>,
}

impl RankTable {
    /// Builds every column from `(strategy, granularity, method, dataset,
    /// value)` entries.
    pub fn build<'a, I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Strategy, Granularity, &'a str, &'a str, f64)>,
    {
        let mut grouped: BTreeMap<(Strategy, Granularity), BTreeMap<(String, String), f64>> =
            BTreeMap::new();
        for (strategy, g, method, dataset, value) in entries {
            grouped
                .entry((strategy, g))
                .or_default()
                .insert((method.to_string(), dataset.to_string()), value);
        }
        let mut columns = BTreeMap::new();
        for (key, values) in grouped {
            columns.insert(key, average_rank(&values)?);
        }
        Ok(RankTable { columns })
    }

    pub fn methods(&self) -> Vec<String> {
        let mut m: Vec<String> = self
            .columns
            .values()
            .flat_map(|c| c.keys().cloned())
            .collect();
        m.sort();
        m.dedup();
        m
    }

    pub fn rank(&self, strategy: Strategy, g: Granularity, method: &str) -> Option<f64> {
        self.columns.get(&(strategy, g))?.get(method).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn s(score: f64, positive: bool) -> ScoredSample {
        ScoredSample { score, positive }
    }

    #[test]
    fn auroc_perfect_and_tied() {
        let perfect = [s(0.9, true), s(0.8, true), s(0.3, false), s(0.2, false)];
        assert_eq!(auroc(&perfect).unwrap(), 1.0);
        assert_eq!(auroc(&[s(0.5, true), s(0.5, false)]).unwrap(), 0.5);
        let flat: Vec<_> = (0..9).map(|i| s(0.3, i % 3 == 0)).collect();
        assert_eq!(auroc(&flat).unwrap(), 0.5);
    }

    #[test]
    fn auroc_single_class_undefined() {
        assert!(matches!(
            auroc(&[s(0.1, true), s(0.2, true)]),
            Err(Error::UndefinedMetric(_))
        ));
        assert!(auroc(&[s(f64::NAN, true), s(0.2, false)]).is_err());
    }

    #[test]
    fn ap_examples() {
        assert_eq!(
            average_precision(&[s(0.9, true), s(0.1, false)]).unwrap(),
            1.0
        );
        assert_eq!(
            average_precision(&[s(0.9, false), s(0.8, true)]).unwrap(),
            0.5
        );
        assert!(average_precision(&[s(0.9, false)]).is_err());
    }

    #[test]
    fn ap_pessimistic_ties() {
        // all tied: negatives first, so positives sit at ranks 3 and 4
        let tied = [s(1.0, true), s(1.0, false), s(1.0, true), s(1.0, false)];
        let expected = (1.0 / 3.0 + 2.0 / 4.0) / 2.0;
        assert!((average_precision(&tied).unwrap() - expected).abs() < 1e-15);
        // below the 0.5 base rate: the pessimistic order puts positives last
        assert!(average_precision(&tied).unwrap() < 0.5);
        // binary scores: one seen positive, one unseen positive, two negatives
        let binary = [s(1.0, true), s(0.0, true), s(0.0, false), s(0.0, false)];
        let expected = (1.0 + 2.0 / 4.0) / 2.0;
        assert!((average_precision(&binary).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn rank_ties_average() {
        assert_eq!(rank_descending(&[0.9, 0.9, 0.1]), vec![1.5, 1.5, 3.0]);
        assert_eq!(rank_descending(&[0.1, 0.5, 0.3]), vec![3.0, 1.0, 2.0]);
    }

    fn table(rows: &[(&str, &str, f64)]) -> BTreeMap<(String, String), f64> {
        rows.iter()
            .map(|(m, d, v)| ((m.to_string(), d.to_string()), *v))
            .collect()
    }

    #[test]
    fn average_rank_hand_computed() {
        // d1: A 0.9 (1), B 0.8 (2), C 0.7 (3)
        // d2: A 0.6 (2.5), B 0.9 (1), C 0.6 (2.5)
        let t = table(&[
            ("A", "d1", 0.9),
            ("B", "d1", 0.8),
            ("C", "d1", 0.7),
            ("A", "d2", 0.6),
            ("B", "d2", 0.9),
            ("C", "d2", 0.6),
        ]);
        let r = average_rank(&t).unwrap();
        assert_eq!(r["A"], 1.75);
        assert_eq!(r["B"], 1.5);
        assert_eq!(r["C"], 2.75);
    }

    #[test]
    fn dominant_method_ranks_first() {
        let t = table(&[
            ("A", "x", 0.9),
            ("B", "x", 0.1),
            ("A", "y", 0.7),
            ("B", "y", 0.6),
        ]);
        assert_eq!(average_rank(&t).unwrap()["A"], 1.0);
    }

    #[test]
    fn missing_cell_is_error() {
        let t = table(&[("A", "x", 0.9), ("B", "x", 0.1), ("A", "y", 0.7)]);
        assert!(matches!(
            average_rank(&t),
            Err(Error::IncompleteTable { .. })
        ));
    }

    #[test]
    fn two_run_std_is_population() {
        let runs = [
            Ok(RunMetrics {
                auroc: 0.8,
                ap: 0.7,
                n_pos: 10,
                n_neg: 10,
                fallback_fraction: 0.0,
            }),
            Ok(RunMetrics {
                auroc: 0.9,
                ap: 0.5,
                n_pos: 10,
                n_neg: 10,
                fallback_fraction: 0.2,
            }),
            Err(Error::UndefinedMetric("x")),
        ];
        let cell = EvalCell::from_runs(&runs).unwrap();
        assert!((cell.auroc - 0.85).abs() < 1e-12);
        assert!((cell.auroc_std - 0.05).abs() < 1e-12);
        assert!((cell.ap_std - 0.1).abs() < 1e-12);
        assert!((cell.fallback_fraction - 0.1).abs() < 1e-12);
        assert_eq!(cell.runs, 2);
        assert_eq!(cell.undefined_runs, 1);
    }

    #[test]
    fn rank_table_columns() {
        let entries = [
            (Strategy::Random, Granularity::Day, "a", "d1", 0.5),
            (Strategy::Random, Granularity::Day, "b", "d1", 0.6),
        ];
        let t = RankTable::build(entries).unwrap();
        assert_eq!(t.rank(Strategy::Random, Granularity::Day, "b"), Some(1.0));
        assert_eq!(t.methods(), vec!["a".to_string(), "b".to_string()]);
    }
}
