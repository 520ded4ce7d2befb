//! Negative edge sampling for evaluation batches.
//!
//! Three regimes:
//! - random: uniform `(src, dst)` pairs from the node and destination
//!   universes;
//! - historical: edges seen before the evaluation segment;
//! - inductive: edges first appearing in the evaluation segment.
//!
//! Every regime excludes the positives of the batch being scored. When a
//! pool cannot cover the request after exclusion, the shortfall is drawn
//! with the random regime and counted as fallback.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use hashbrown::HashSet;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::split::{DatasetSplit, Segment};
use crate::stream::{Event, Granularity};
use crate::{Edge, NodeId};

/// Draw attempts per random negative before giving up.
const MAX_RANDOM_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    Random,
    Historical,
    Inductive,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Random, Strategy::Historical, Strategy::Inductive];

    pub const fn label(self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::Historical => "historical",
            Strategy::Inductive => "inductive",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "random" | "rand" | "randns" => Ok(Strategy::Random),
            "historical" | "hist" | "histns" => Ok(Strategy::Historical),
            "inductive" | "indu" | "induns" => Ok(Strategy::Inductive),
            other => Err(Error::Config(format!(
                "unknown sampling strategy `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerConfig {
    pub strategy: Strategy,
    pub negatives_per_positive: usize,
    pub seed: u64,
    pub batch_size: usize,
}

impl SamplerConfig {
    pub fn new(strategy: Strategy, seed: u64) -> Self {
        SamplerConfig {
            strategy,
            negatives_per_positive: 1,
            seed,
            batch_size: 200,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.negatives_per_positive == 0 {
            return Err(Error::Config(
                "negatives_per_positive must be at least 1".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Seed for one evaluation run, derived from the master seed and the cell
/// identity so runs are independent yet reproducible.
pub fn derive_seed(
    master_seed: u64,
    dataset: &str,
    train_g: Granularity,
    test_g: Granularity,
    strategy: Strategy,
    run_index: u32,
) -> u64 {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    for part in [dataset, train_g.label(), test_g.label(), strategy.label()] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    h.update(run_index.to_le_bytes());
    let digest = h.finalize();
    let mut first = [0u8; 8];
    first.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(first)
}

/// Candidate pools for one evaluation segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegativePools {
    /// Distinct edges observed strictly before the segment, sorted.
    pub historical: Vec<Edge>,
    /// Distinct edges of the segment not in `historical`, sorted.
    pub inductive: Vec<Edge>,
    pub node_universe: Vec<NodeId>,
    pub dst_universe: Vec<NodeId>,
}

impl NegativePools {
    fn pool(&self, strategy: Strategy) -> Option<&[Edge]> {
        match strategy {
            Strategy::Random => None,
            Strategy::Historical => Some(&self.historical),
            Strategy::Inductive => Some(&self.inductive),
        }
    }
}

pub fn build_pools(split: &DatasetSplit, segment: Segment) -> Result<NegativePools> {
    if segment == Segment::Train {
        return Err(Error::Config(
            "negative pools are built for val or test only".into(),
        ));
    }
    let historical = split.history(segment).distinct_edges();
    let inductive: Vec<Edge> = split
        .segment(segment)
        .distinct_edges()
        .into_iter()
        .filter(|e| historical.binary_search(e).is_err())
        .collect();
    Ok(NegativePools {
        historical,
        inductive,
        node_universe: split.train.node_universe().to_vec(),
        dst_universe: split.train.dst_universe().to_vec(),
    })
}

/// Negatives for one batch. The last `fallback` pairs came from the random
/// fallback.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BatchNegatives {
    pub pairs: Vec<Edge>,
    pub fallback: usize,
}

impl BatchNegatives {
    pub fn is_fallback(&self, i: usize) -> bool {
        i >= self.pairs.len() - self.fallback
    }
}

pub fn sample_batch_negatives<R: Rng + ?Sized>(
    positives: &[Event],
    pools: &NegativePools,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<BatchNegatives> {
    cfg.validate()?;
    if pools.node_universe.is_empty() || pools.dst_universe.is_empty() {
        return Err(Error::EmptyUniverse);
    }
    let request = cfg.negatives_per_positive * positives.len();
    let exclude: HashSet<Edge> = positives.iter().map(Event::edge).collect();
    let mut pairs = Vec::with_capacity(request);

    if let Some(pool) = pools.pool(cfg.strategy) {
        draw_from_pool(pool, &exclude, request, rng, &mut pairs);
    }
    let fallback = request - pairs.len();
    for _ in 0..fallback {
        pairs.push(draw_random(pools, &exclude, rng)?);
    }
    Ok(BatchNegatives { pairs, fallback })
}

/// Up to `request` distinct pool entries not in `exclude`.
fn draw_from_pool<R: Rng + ?Sized>(
    pool: &[Edge],
    exclude: &HashSet<Edge>,
    request: usize,
    rng: &mut R,
    out: &mut Vec<Edge>,
) {
    let mut excluded: Vec<usize> = exclude
        .iter()
        .filter_map(|e| pool.binary_search(e).ok())
        .collect();
    excluded.sort_unstable();
    let available = pool.len() - excluded.len();
    let take = request.min(available);
    if take == 0 {
        return;
    }
    for i in index::sample(rng, available, take) {
        // i-th surviving position, skipping excluded ones in order
        let mut pos = i;
        for &x in &excluded {
            if x <= pos {
                pos += 1;
            } else {
                break;
            }
        }
        out.push(pool[pos]);
    }
}

fn draw_random<R: Rng + ?Sized>(
    pools: &NegativePools,
    exclude: &HashSet<Edge>,
    rng: &mut R,
) -> Result<Edge> {
    for _ in 0..MAX_RANDOM_ATTEMPTS {
        let src = pools.node_universe[rng.random_range(0..pools.node_universe.len())];
        let dst = pools.dst_universe[rng.random_range(0..pools.dst_universe.len())];
        if !exclude.contains(&(src, dst)) {
            return Ok((src, dst));
        }
    }
    Err(Error::SamplingExhausted)
}

/// Supplies negatives batch by batch during evaluation.
pub trait NegativeSource {
    fn negatives(&mut self, batch_idx: usize, positives: &[Event]) -> Result<BatchNegatives>;
}

/// Seeded sampler over fixed pools.
#[derive(Debug, Clone)]
pub struct PoolSampler {
    pools: NegativePools,
    cfg: SamplerConfig,
    rng: ChaCha8Rng,
}

impl PoolSampler {
    pub fn new(pools: NegativePools, cfg: SamplerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(PoolSampler {
            pools,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            cfg,
        })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.cfg
    }
}

impl NegativeSource for PoolSampler {
    fn negatives(&mut self, _batch_idx: usize, positives: &[Event]) -> Result<BatchNegatives> {
        sample_batch_negatives(positives, &self.pools, &self.cfg, &mut self.rng)
    }
}

/// Replays negatives recorded from an earlier run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PinnedNegatives {
    batches: Vec<BatchNegatives>,
}

impl PinnedNegatives {
    pub fn new(batches: Vec<BatchNegatives>) -> Self {
        PinnedNegatives { batches }
    }

    pub fn batches(&self) -> &[BatchNegatives] {
        &self.batches
    }
}

impl NegativeSource for PinnedNegatives {
    fn negatives(&mut self, batch_idx: usize, _positives: &[Event]) -> Result<BatchNegatives> {
        self.batches
            .get(batch_idx)
            .cloned()
            .ok_or(Error::PinnedExhausted { batch: batch_idx })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::split::{compute_boundaries, split};
    use crate::stream::EdgeStream;
    use alloc::vec;

    fn ev(src: NodeId, dst: NodeId, t: i64) -> Event {
        Event {
            src,
            dst,
            t_orig: t,
            t_bucketed: t,
            seq: t as u64,
        }
    }

    fn pools(hist: &[Edge], indu: &[Edge], nodes: &[NodeId]) -> NegativePools {
        NegativePools {
            historical: hist.to_vec(),
            inductive: indu.to_vec(),
            node_universe: nodes.to_vec(),
            dst_universe: nodes.to_vec(),
        }
    }

    #[test]
    fn pools_from_hand_split() {
        const DAY: i64 = crate::SECONDS_PER_DAY;
        // train days 0..4, val day 4, test day 5
        let s = EdgeStream::from_triples(
            [
                (1, 2, 0),
                (1, 2, 4 * DAY),
                (1, 2, 5 * DAY),
                (3, 4, 5 * DAY + 1),
            ],
            false,
        );
        let d = split(&s, &compute_boundaries(&s).unwrap()).unwrap();
        let p = build_pools(&d, Segment::Test).unwrap();
        assert_eq!(p.historical, vec![(1, 2)]);
        assert_eq!(p.inductive, vec![(3, 4)]);
        let v = build_pools(&d, Segment::Val).unwrap();
        assert_eq!(v.historical, vec![(1, 2)]);
        assert!(v.inductive.is_empty());
        assert!(build_pools(&d, Segment::Train).is_err());
    }

    #[test]
    fn single_historical_choice() {
        let p = pools(&[(1, 2)], &[], &[1, 2, 3, 4]);
        let cfg = SamplerConfig::new(Strategy::Historical, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = sample_batch_negatives(&[ev(3, 4, 1)], &p, &cfg, &mut rng).unwrap();
        assert_eq!(out.pairs, vec![(1, 2)]);
        assert_eq!(out.fallback, 0);
    }

    #[test]
    fn pool_equal_to_positives_falls_back_entirely() {
        let p = pools(&[(1, 2), (3, 4)], &[], &[1, 2, 3, 4, 5]);
        let cfg = SamplerConfig::new(Strategy::Historical, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let batch = [ev(1, 2, 1), ev(3, 4, 2)];
        let out = sample_batch_negatives(&batch, &p, &cfg, &mut rng).unwrap();
        assert_eq!(out.pairs.len(), 2);
        assert_eq!(out.fallback, 2);
        assert!(out.is_fallback(0) && out.is_fallback(1));
        assert!(out.pairs.iter().all(|e| *e != (1, 2) && *e != (3, 4)));
    }

    #[test]
    fn partial_shortfall() {
        let p = pools(&[], &[(5, 6)], &[1, 2, 5, 6]);
        let mut cfg = SamplerConfig::new(Strategy::Inductive, 3);
        cfg.negatives_per_positive = 2;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let out = sample_batch_negatives(&[ev(1, 2, 0)], &p, &cfg, &mut rng).unwrap();
        assert_eq!(out.pairs.len(), 2);
        assert_eq!(out.pairs[0], (5, 6));
        assert_eq!(out.fallback, 1);
    }

    #[test]
    fn pool_draws_are_distinct() {
        let hist: Vec<Edge> = (0..50).map(|i| (i, i + 1)).collect();
        let p = pools(&hist, &[], &(0..60).collect::<Vec<_>>());
        let cfg = SamplerConfig::new(Strategy::Historical, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let batch: Vec<Event> = (0..40).map(|i| ev(i, i + 1, i as i64)).collect();
        let out = sample_batch_negatives(&batch, &p, &cfg, &mut rng).unwrap();
        // 10 survive exclusion, 30 fall back
        let from_pool: Vec<_> = out.pairs[..out.pairs.len() - out.fallback].to_vec();
        assert_eq!(from_pool.len(), 10);
        assert!(from_pool.iter().all(|&(s, _)| s >= 40));
        let mut fp = from_pool.clone();
        fp.sort_unstable();
        fp.dedup();
        assert_eq!(fp.len(), 10);
    }

    #[test]
    fn empty_universe() {
        let p = pools(&[], &[], &[]);
        let cfg = SamplerConfig::new(Strategy::Random, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            sample_batch_negatives(&[ev(0, 1, 0)], &p, &cfg, &mut rng),
            Err(Error::EmptyUniverse)
        );
    }

    #[test]
    fn exhausted_random_space() {
        let p = pools(&[], &[], &[1]);
        let cfg = SamplerConfig::new(Strategy::Random, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            sample_batch_negatives(&[ev(1, 1, 0)], &p, &cfg, &mut rng),
            Err(Error::SamplingExhausted)
        );
    }

    #[test]
    fn random_exclusion_over_many_trials() {
        let nodes: Vec<NodeId> = (0..6).collect();
        let p = pools(&[], &[], &nodes);
        let cfg = SamplerConfig::new(Strategy::Random, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..1000u32 {
            let batch: Vec<Event> = (0..8)
                .map(|i| ev((trial + i) % 6, (trial * 7 + i * 3) % 6, i as i64))
                .collect();
            let positives: HashSet<Edge> = batch.iter().map(Event::edge).collect();
            let out = sample_batch_negatives(&batch, &p, &cfg, &mut rng).unwrap();
            assert_eq!(out.pairs.len(), batch.len());
            assert!(out.pairs.iter().all(|e| !positives.contains(e)));
        }
    }

    #[test]
    fn seeds_are_stable_and_distinct() {
        let a = derive_seed(
            42,
            "wikipedia",
            Granularity::Second,
            Granularity::Hour,
            Strategy::Random,
            0,
        );
        let b = derive_seed(
            42,
            "wikipedia",
            Granularity::Second,
            Granularity::Hour,
            Strategy::Random,
            0,
        );
        let c = derive_seed(
            42,
            "wikipedia",
            Granularity::Second,
            Granularity::Hour,
            Strategy::Random,
            1,
        );
        let d = derive_seed(
            42,
            "wikipedi",
            Granularity::Second,
            Granularity::Hour,
            Strategy::Random,
            0,
        );
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn pinned_replay() {
        let batch = BatchNegatives {
            pairs: vec![(1, 2)],
            fallback: 0,
        };
        let mut pinned = PinnedNegatives::new(vec![batch.clone()]);
        assert_eq!(pinned.negatives(0, &[]).unwrap(), batch);
        assert_eq!(
            pinned.negatives(1, &[]),
            Err(Error::PinnedExhausted { batch: 1 })
        );
    }

    #[test]
    fn zero_ratio_rejected() {
        let mut cfg = SamplerConfig::new(Strategy::Random, 0);
        cfg.negatives_per_positive = 0;
        assert!(cfg.validate().is_err());
    }
}
