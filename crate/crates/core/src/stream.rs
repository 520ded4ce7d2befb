//! Edge-addition event streams and their time-bucketed views.
//!
//! A stream is a multiset of `(src, dst, t)` events. Coarsening replaces
//! each event's bucketed timestamp with the start of its epoch-anchored
//! bucket and never merges or drops events, so duplicate edges survive at
//! every granularity.

use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use hashbrown::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::{Edge, NodeId, Timestamp, SECONDS_PER_DAY};

/// One directed timestamped interaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    pub src: NodeId,
    pub dst: NodeId,
    /// Raw timestamp in seconds.
    pub t_orig: Timestamp,
    /// Start of the granularity bucket holding `t_orig`.
    pub t_bucketed: Timestamp,
    /// Ingestion ordinal, unique per stream and fixed at parse time.
    pub seq: u64,
}

impl Event {
    pub fn edge(&self) -> Edge {
        (self.src, self.dst)
    }
}

/// Bucket width used to coarsen timestamps.
///
/// `Second` through `Day` form the evaluation protocol. `Month` (30 days)
/// and `Year` (365 days) are fixed-width buckets kept for the chronological
/// split investigation only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Granularity {
    Second,
    Minute,
    Hour,
    Day,
    Month,
    Year,
}

impl Granularity {
    /// The four granularities of the evaluation protocol, finest first.
    pub const PROTOCOL: [Granularity; 4] = [
        Granularity::Second,
        Granularity::Minute,
        Granularity::Hour,
        Granularity::Day,
    ];

    pub const fn width(self) -> Timestamp {
        match self {
            Granularity::Second => 1,
            Granularity::Minute => 60,
            Granularity::Hour => 3_600,
            Granularity::Day => SECONDS_PER_DAY,
            Granularity::Month => 30 * SECONDS_PER_DAY,
            Granularity::Year => 365 * SECONDS_PER_DAY,
        }
    }

    pub const fn label(self) -> &'static str {
        match self {
            Granularity::Second => "second",
            Granularity::Minute => "minute",
            Granularity::Hour => "hour",
            Granularity::Day => "day",
            Granularity::Month => "month",
            Granularity::Year => "year",
        }
    }

    /// Model-name suffix, e.g. `-h` for hour-trained models.
    pub const fn suffix(self) -> &'static str {
        match self {
            Granularity::Second => "s",
            Granularity::Minute => "m",
            Granularity::Hour => "h",
            Granularity::Day => "d",
            Granularity::Month => "mo",
            Granularity::Year => "y",
        }
    }

    /// Start of the epoch-anchored bucket containing `t`.
    pub const fn bucket_start(self, t: Timestamp) -> Timestamp {
        let w = self.width();
        t.div_euclid(w) * w
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "s" | "sec" | "second" | "seconds" => Granularity::Second,
            "m" | "min" | "minute" | "minutes" => Granularity::Minute,
            "h" | "hour" | "hours" => Granularity::Hour,
            "d" | "day" | "days" => Granularity::Day,
            "mo" | "month" | "months" => Granularity::Month,
            "y" | "year" | "years" => Granularity::Year,
            _ => return Err(Error::UnknownGranularity(s.to_string())),
        })
    }
}

/// Time-ordered multiset of events at one granularity.
///
/// Events are sorted by `(t_bucketed, seq)`. The node and destination
/// universes describe the whole dataset and are shared, unchanged, by every
/// coarsened or split view derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeStream {
    events: Vec<Event>,
    granularity: Granularity,
    bipartite: bool,
    node_universe: Arc<[NodeId]>,
    dst_universe: Arc<[NodeId]>,
}

impl EdgeStream {
    /// Builds a second-granularity stream from raw `(src, dst, t)` triples
    /// in file order. `seq` follows input order; events are then stably
    /// ordered by `t`.
    ///
    /// For bipartite data the destination universe is the set of observed
    /// destinations; otherwise it equals the node universe.
    pub fn from_triples<I>(triples: I, bipartite: bool) -> Self
    where
        I: IntoIterator<Item = (NodeId, NodeId, Timestamp)>,
    {
        let mut events: Vec<Event> = triples
            .into_iter()
            .enumerate()
            .map(|(i, (src, dst, t))| Event {
                src,
                dst,
                t_orig: t,
                t_bucketed: t,
                seq: i as u64,
            })
            .collect();
        events.sort_unstable_by_key(|e| (e.t_bucketed, e.seq));

        let mut nodes: Vec<NodeId> = events.iter().flat_map(|e| [e.src, e.dst]).collect();
        nodes.sort_unstable();
        nodes.dedup();
        let node_universe: Arc<[NodeId]> = nodes.into();
        let dst_universe = if bipartite {
            let mut dsts: Vec<NodeId> = events.iter().map(|e| e.dst).collect();
            dsts.sort_unstable();
            dsts.dedup();
            dsts.into()
        } else {
            node_universe.clone()
        };

        EdgeStream {
            events,
            granularity: Granularity::Second,
            bipartite,
            node_universe,
            dst_universe,
        }
    }

    /// A stream over `events` that shares this stream's universes and
    /// granularity. Events are put in `(t_bucketed, seq)` order.
    pub fn with_events(&self, mut events: Vec<Event>) -> Self {
        events.sort_unstable_by_key(|e| (e.t_bucketed, e.seq));
        EdgeStream {
            events,
            granularity: self.granularity,
            bipartite: self.bipartite,
            node_universe: self.node_universe.clone(),
            dst_universe: self.dst_universe.clone(),
        }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn is_bipartite(&self) -> bool {
        self.bipartite
    }

    /// Sorted ids of every node appearing as source or destination.
    pub fn node_universe(&self) -> &[NodeId] {
        &self.node_universe
    }

    /// Sorted ids of every possible destination.
    pub fn dst_universe(&self) -> &[NodeId] {
        &self.dst_universe
    }

    pub fn min_t_orig(&self) -> Option<Timestamp> {
        self.events.iter().map(|e| e.t_orig).min()
    }

    pub fn max_t_orig(&self) -> Option<Timestamp> {
        self.events.iter().map(|e| e.t_orig).max()
    }

    /// Re-buckets every event at `g`, keeping count, `seq` and `t_orig`.
    pub fn coarsen(&self, g: Granularity) -> Result<Self> {
        if g.width() < self.granularity.width() {
            return Err(Error::InvalidCoarsening {
                from: self.granularity,
                to: g,
            });
        }
        let mut events = self.events.clone();
        for e in &mut events {
            e.t_bucketed = g.bucket_start(e.t_orig);
        }
        events.sort_unstable_by_key(|e| (e.t_bucketed, e.seq));
        Ok(EdgeStream {
            events,
            granularity: g,
            bipartite: self.bipartite,
            node_universe: self.node_universe.clone(),
            dst_universe: self.dst_universe.clone(),
        })
    }

    /// Multiset union of all edges with `t_bucketed <= t`.
    pub fn cumulative_edges(&self, t: Timestamp) -> EdgeMultiset {
        let end = self.events.partition_point(|e| e.t_bucketed <= t);
        let mut counts: HashMap<Edge, usize> = HashMap::new();
        for e in &self.events[..end] {
            *counts.entry(e.edge()).or_insert(0) += 1;
        }
        EdgeMultiset { counts, total: end }
    }

    /// Distinct `(src, dst)` pairs, sorted.
    pub fn distinct_edges(&self) -> Vec<Edge> {
        let mut edges: Vec<Edge> = self.events.iter().map(Event::edge).collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// Number of distinct bucketed timestamps.
    pub fn unique_steps(&self) -> usize {
        // sorted by t_bucketed, so distinct values are run boundaries
        let mut steps = 0;
        let mut last = None;
        for e in &self.events {
            if last != Some(e.t_bucketed) {
                steps += 1;
                last = Some(e.t_bucketed);
            }
        }
        steps
    }

    pub fn stats(&self) -> Result<DatasetStats> {
        let (first, last) = match (self.min_t_orig(), self.max_t_orig()) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::EmptyStream),
        };
        let unique: HashSet<Edge> = self.events.iter().map(Event::edge).collect();
        let total = self.events.len();
        Ok(DatasetStats {
            num_nodes: self.node_universe.len(),
            total_edges: total,
            unique_edges: unique.len(),
            unique_steps: self.unique_steps(),
            duration_seconds: last - first,
            duplication_ratio: 1.0 - unique.len() as f64 / total as f64,
        })
    }
}

/// Edge multiplicities of a stream prefix.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeMultiset {
    counts: HashMap<Edge, usize>,
    total: usize,
}

impl EdgeMultiset {
    pub fn multiplicity(&self, edge: Edge) -> usize {
        self.counts.get(&edge).copied().unwrap_or(0)
    }

    /// Sum of multiplicities.
    pub fn total(&self) -> usize {
        self.total
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (Edge, usize)> + '_ {
        self.counts.iter().map(|(&e, &c)| (e, c))
    }

    /// Multiset inclusion: every multiplicity here is at most the one in
    /// `other`.
    pub fn is_subset_of(&self, other: &EdgeMultiset) -> bool {
        self.counts
            .iter()
            .all(|(e, &c)| other.multiplicity(*e) >= c)
    }
}

/// Summary statistics of one dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetStats {
    pub num_nodes: usize,
    pub total_edges: usize,
    pub unique_edges: usize,
    /// Distinct bucketed timestamps at the stream's granularity.
    pub unique_steps: usize,
    pub duration_seconds: Timestamp,
    /// `1 - unique_edges / total_edges`.
    pub duplication_ratio: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn stream(triples: &[(NodeId, NodeId, Timestamp)]) -> EdgeStream {
        EdgeStream::from_triples(triples.iter().copied(), false)
    }

    #[test]
    fn stable_order_keeps_duplicates() {
        let s = stream(&[(1, 2, 10), (1, 2, 10), (2, 3, 5)]);
        let ts: Vec<_> = s.events().iter().map(|e| (e.t_orig, e.seq)).collect();
        assert_eq!(ts, vec![(5, 2), (10, 0), (10, 1)]);
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn hour_bucket_floor() {
        let s = stream(&[(0, 1, 3661)]).coarsen(Granularity::Hour).unwrap();
        assert_eq!(s.events()[0].t_bucketed, 3600);
        assert_eq!(s.events()[0].t_orig, 3661);
    }

    #[test]
    fn negative_timestamps_floor_toward_minus_infinity() {
        assert_eq!(Granularity::Minute.bucket_start(-1), -60);
        assert_eq!(Granularity::Minute.bucket_start(-60), -60);
    }

    #[test]
    fn second_coarsening_is_identity() {
        let s = stream(&[(0, 1, 7), (1, 2, 3), (2, 0, 11)]);
        assert_eq!(s.coarsen(Granularity::Second).unwrap(), s);
    }

    #[test]
    fn minute_buckets_merge_steps() {
        let s = stream(&[(0, 1, 0), (0, 1, 59), (1, 0, 60)]);
        assert_eq!(s.unique_steps(), 3);
        let m = s.coarsen(Granularity::Minute).unwrap();
        let buckets: Vec<_> = m.events().iter().map(|e| e.t_bucketed).collect();
        assert_eq!(buckets, vec![0, 0, 60]);
        assert_eq!(m.unique_steps(), 2);
    }

    #[test]
    fn refining_is_rejected() {
        let d = stream(&[(0, 1, 5)]).coarsen(Granularity::Day).unwrap();
        assert!(matches!(
            d.coarsen(Granularity::Hour),
            Err(Error::InvalidCoarsening { .. })
        ));
    }

    #[test]
    fn coarsening_reorders_within_bucket_by_seq() {
        // seq 0 at t=50, seq 1 at t=10: same minute, so seq order wins.
        let s = stream(&[(0, 1, 50), (2, 3, 10)]);
        assert_eq!(s.events()[0].seq, 1);
        let m = s.coarsen(Granularity::Minute).unwrap();
        assert_eq!(m.events()[0].seq, 0);
    }

    #[test]
    fn cumulative_prefix() {
        let s = stream(&[(1, 2, 5), (1, 2, 10), (2, 3, 20)]);
        assert!(s.cumulative_edges(4).is_empty());
        let at10 = s.cumulative_edges(10);
        assert_eq!(at10.multiplicity((1, 2)), 2);
        assert_eq!(at10.distinct(), 1);
        assert_eq!(s.cumulative_edges(20).total(), 3);
        assert!(at10.is_subset_of(&s.cumulative_edges(20)));
        assert!(!s.cumulative_edges(20).is_subset_of(&at10));
    }

    #[test]
    fn stats_single_event() {
        let st = stream(&[(4, 9, 100)]).stats().unwrap();
        assert_eq!(st.total_edges, 1);
        assert_eq!(st.unique_edges, 1);
        assert_eq!(st.num_nodes, 2);
        assert_eq!(st.duplication_ratio, 0.0);
        assert_eq!(st.duration_seconds, 0);
    }

    #[test]
    fn stats_empty_is_error() {
        assert_eq!(stream(&[]).stats(), Err(Error::EmptyStream));
    }

    #[test]
    fn social_evo_duplication_from_published_counts() {
        // 1 - unique/total with the published Social Evo. counts
        let ratio: f64 = 1.0 - 4_486.0 / 2_099_519.0;
        assert!((ratio - 0.997_863).abs() < 1e-6);
        assert!(ratio > 0.9);
    }

    #[test]
    fn bipartite_dst_universe() {
        let s = EdgeStream::from_triples([(0, 10, 1), (1, 11, 2), (0, 11, 3)], true);
        assert_eq!(s.node_universe(), &[0, 1, 10, 11]);
        assert_eq!(s.dst_universe(), &[10, 11]);
        let u = EdgeStream::from_triples([(0, 10, 1)], false);
        assert_eq!(u.dst_universe(), u.node_universe());
    }

    #[test]
    fn granularity_parse_roundtrip() {
        for g in Granularity::PROTOCOL {
            assert_eq!(g.label().parse::<Granularity>().unwrap(), g);
            assert_eq!(g.suffix().parse::<Granularity>().unwrap(), g);
        }
        assert!("fortnight".parse::<Granularity>().is_err());
    }
}
