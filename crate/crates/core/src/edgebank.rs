//! EdgeBank memorization baselines and the predictor contract every
//! evaluated method implements.
//!
//! EdgeBank scores a candidate 1.0 if its `(src, dst)` pair is in memory
//! and 0.0 otherwise. The time-window variant additionally requires the
//! last sighting to lie within `window_seconds` of the query time.

use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::error::{Error, Result};
use crate::stream::{EdgeStream, Event, Granularity};
use crate::{Edge, Timestamp};

/// What a predictor learns about the evaluation setup at init time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InitContext {
    /// Granularity the warm-up stream is bucketed at.
    pub granularity: Granularity,
    /// Raw duration of the validation segment in seconds.
    pub val_span_seconds: Timestamp,
}

/// Contract for anything the harness can evaluate.
///
/// The harness calls `init` once, then for each batch `score_batch`
/// followed by `update` with that batch's positives. `score_batch` must not
/// change model state.
pub trait LinkPredictor {
    fn name(&self) -> &str;

    fn init(&mut self, warmup: &EdgeStream, ctx: &InitContext) -> Result<()>;

    /// One score in `[0, 1]` per candidate.
    fn score_batch(&self, candidates: &[Edge], now: Timestamp) -> Result<Vec<f64>>;

    fn update(&mut self, observed: &[Event]) -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeBankVariant {
    /// Remembers every edge forever.
    Infinity,
    /// Remembers edges seen within the last `window_seconds`.
    TimeWindow,
}

impl EdgeBankVariant {
    pub const fn method_name(self) -> &'static str {
        match self {
            EdgeBankVariant::Infinity => "edgebank_inf",
            EdgeBankVariant::TimeWindow => "edgebank_tw",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeBank {
    variant: EdgeBankVariant,
    window_seconds: Option<Timestamp>,
    last_seen: HashMap<Edge, Timestamp>,
}

impl EdgeBank {
    /// An empty memory. The window of the time-window variant is set by
    /// [`EdgeBank::init_memory`] or [`LinkPredictor::init`].
    pub fn new(variant: EdgeBankVariant) -> Self {
        EdgeBank {
            variant,
            window_seconds: None,
            last_seen: HashMap::new(),
        }
    }

    /// Memory warmed up on `warmup`; later events overwrite earlier ones.
    /// The time-window variant uses `val_span_seconds` as its window.
    pub fn init_memory(
        warmup: &EdgeStream,
        variant: EdgeBankVariant,
        val_span_seconds: Timestamp,
    ) -> Result<Self> {
        let window_seconds = match variant {
            EdgeBankVariant::Infinity => None,
            EdgeBankVariant::TimeWindow if val_span_seconds > 0 => Some(val_span_seconds),
            EdgeBankVariant::TimeWindow => {
                return Err(Error::Config("time window must be positive".into()))
            }
        };
        let mut last_seen = HashMap::with_capacity(warmup.len() / 4);
        for e in warmup.events() {
            last_seen.insert(e.edge(), e.t_bucketed);
        }
        Ok(EdgeBank {
            variant,
            window_seconds,
            last_seen,
        })
    }

    pub fn variant(&self) -> EdgeBankVariant {
        self.variant
    }

    pub fn window_seconds(&self) -> Option<Timestamp> {
        self.window_seconds
    }

    pub fn len(&self) -> usize {
        self.last_seen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.last_seen.is_empty()
    }

    pub fn last_seen(&self, edge: Edge) -> Option<Timestamp> {
        self.last_seen.get(&edge).copied()
    }

    pub fn score_one(&self, edge: Edge, now: Timestamp) -> f64 {
        match (self.last_seen.get(&edge), self.window_seconds) {
            (None, _) => 0.0,
            (Some(_), None) => 1.0,
            (Some(&seen), Some(w)) if now - seen <= w => 1.0,
            (Some(_), Some(_)) => 0.0,
        }
    }

    pub fn score(&self, candidates: &[Edge], now: Timestamp) -> Vec<f64> {
        candidates.iter().map(|&e| self.score_one(e, now)).collect()
    }

    /// Keeps the latest bucketed timestamp per observed edge.
    pub fn observe(&mut self, observed: &[Event]) {
        for e in observed {
            self.last_seen
                .entry(e.edge())
                .and_modify(|t| *t = (*t).max(e.t_bucketed))
                .or_insert(e.t_bucketed);
        }
    }
}

impl LinkPredictor for EdgeBank {
    fn name(&self) -> &str {
        self.variant.method_name()
    }

    fn init(&mut self, warmup: &EdgeStream, ctx: &InitContext) -> Result<()> {
        *self = EdgeBank::init_memory(warmup, self.variant, ctx.val_span_seconds)?;
        Ok(())
    }

    fn score_batch(&self, candidates: &[Edge], now: Timestamp) -> Result<Vec<f64>> {
        Ok(self.score(candidates, now))
    }

    fn update(&mut self, observed: &[Event]) -> Result<()> {
        self.observe(observed);
        Ok(())
    }
}
