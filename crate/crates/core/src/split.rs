//! Day-anchored train/validation/test splits shared by every granularity.
//!
//! Boundaries are computed once from raw timestamps, on whole days, and
//! applied to `t_orig`. Because every protocol bucket width divides a day,
//! the same events land in the same segment whatever the granularity.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::stream::{EdgeStream, Event};
use crate::{Timestamp, SECONDS_PER_DAY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Segment {
    Train,
    Val,
    Test,
}

impl Segment {
    pub const ALL: [Segment; 3] = [Segment::Train, Segment::Val, Segment::Test];

    pub const fn label(self) -> &'static str {
        match self {
            Segment::Train => "train",
            Segment::Val => "val",
            Segment::Test => "test",
        }
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl core::str::FromStr for Segment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Segment::Train),
            "val" | "valid" | "validation" => Ok(Segment::Val),
            "test" => Ok(Segment::Test),
            other => Err(Error::Config(alloc::format!("unknown segment `{other}`"))),
        }
    }
}

/// Day-aligned split points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SplitBoundaries {
    /// Epoch day index of the first event.
    pub day0: i64,
    pub n_days: i64,
    pub train_days: i64,
    pub val_days: i64,
    pub test_days: i64,
    /// Exclusive end of training, a multiple of 86400.
    pub train_end_t: Timestamp,
    /// Exclusive end of validation, a multiple of 86400.
    pub val_end_t: Timestamp,
}

impl SplitBoundaries {
    /// Splits `[first_t, last_t]` on calendar days: train gets
    /// `floor(2n/3)` days, validation `floor(n/6)`, test the rest.
    pub fn from_time_range(first_t: Timestamp, last_t: Timestamp) -> Result<Self> {
        let day0 = first_t.div_euclid(SECONDS_PER_DAY);
        let n_days = last_t.div_euclid(SECONDS_PER_DAY) - day0 + 1;
        if n_days < 6 {
            return Err(Error::TooShort { n_days });
        }
        let train_days = 2 * n_days / 3;
        let val_days = n_days / 6;
        let test_days = n_days - train_days - val_days;
        Ok(SplitBoundaries {
            day0,
            n_days,
            train_days,
            val_days,
            test_days,
            train_end_t: (day0 + train_days) * SECONDS_PER_DAY,
            val_end_t: (day0 + train_days + val_days) * SECONDS_PER_DAY,
        })
    }

    /// Length of the validation window in seconds.
    pub fn val_span(&self) -> Timestamp {
        self.val_end_t - self.train_end_t
    }

    pub fn segment_of(&self, t_orig: Timestamp) -> Segment {
        if t_orig < self.train_end_t {
            Segment::Train
        } else if t_orig < self.val_end_t {
            Segment::Val
        } else {
            Segment::Test
        }
    }

    /// `[day_start, day_end)` epoch day indices of a segment.
    pub fn day_range(&self, segment: Segment) -> (i64, i64) {
        let train_end = self.day0 + self.train_days;
        let val_end = train_end + self.val_days;
        match segment {
            Segment::Train => (self.day0, train_end),
            Segment::Val => (train_end, val_end),
            Segment::Test => (val_end, val_end + self.test_days),
        }
    }
}

pub fn compute_boundaries(stream: &EdgeStream) -> Result<SplitBoundaries> {
    match (stream.min_t_orig(), stream.max_t_orig()) {
        (Some(first), Some(last)) => SplitBoundaries::from_time_range(first, last),
        _ => Err(Error::EmptyStream),
    }
}

/// A stream partitioned at shared boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: EdgeStream,
    pub val: EdgeStream,
    pub test: EdgeStream,
    pub boundaries: SplitBoundaries,
}

/// Per-segment event and distinct-timestamp counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SegmentCounts {
    pub events: usize,
    pub steps: usize,
}

impl DatasetSplit {
    pub fn segment(&self, segment: Segment) -> &EdgeStream {
        match segment {
            Segment::Train => &self.train,
            Segment::Val => &self.val,
            Segment::Test => &self.test,
        }
    }

    /// Everything observed before `segment`: train for validation,
    /// train and validation for test.
    pub fn history(&self, segment: Segment) -> EdgeStream {
        let events: Vec<Event> = match segment {
            Segment::Train => Vec::new(),
            Segment::Val => self.train.events().to_vec(),
            Segment::Test => self
                .train
                .events()
                .iter()
                .chain(self.val.events())
                .copied()
                .collect(),
        };
        self.train.with_events(events)
    }

    pub fn counts(&self, segment: Segment) -> SegmentCounts {
        let s = self.segment(segment);
        SegmentCounts {
            events: s.len(),
            steps: s.unique_steps(),
        }
    }

    pub fn total_events(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }
}

/// Partitions `stream` by raw timestamp against `b`.
pub fn split(stream: &EdgeStream, b: &SplitBoundaries) -> Result<DatasetSplit> {
    let mut parts: [Vec<Event>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for e in stream.events() {
        parts[b.segment_of(e.t_orig) as usize].push(*e);
    }
    let [train, val, test] = parts;
    if train.is_empty() || val.is_empty() || test.is_empty() {
        return Err(Error::EmptySplit {
            train: train.len(),
            val: val.len(),
            test: test.len(),
        });
    }
    // subsequences of a sorted stream stay sorted
    Ok(DatasetSplit {
        train: stream.with_events(train),
        val: stream.with_events(val),
        test: stream.with_events(test),
        boundaries: *b,
    })
}

/// Fractions for the ratio-based chronological split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChronoRatios {
    pub train: f64,
    pub val: f64,
}

impl Default for ChronoRatios {
    fn default() -> Self {
        ChronoRatios {
            train: 0.7,
            val: 0.15,
        }
    }
}

/// Outcome of a ratio-based chronological split, before checking for
/// empty segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChronoCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
    /// Last bucket assigned to train.
    pub train_last_bucket: Timestamp,
    /// Last bucket assigned to validation (equal to `train_last_bucket`
    /// when validation is empty).
    pub val_last_bucket: Timestamp,
}

impl ChronoCounts {
    pub fn has_empty_segment(&self) -> bool {
        self.train == 0 || self.val == 0 || self.test == 0
    }
}

/// Train/val/test streams from [`chronological_split`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChronologicalSplit {
    pub train: EdgeStream,
    pub val: EdgeStream,
    pub test: EdgeStream,
    pub counts: ChronoCounts,
}

/// Cut positions for a chronological split of `stream`.
///
/// Cuts sit at the events of ordinal `floor(train·N)` and
/// `floor((train+val)·N)`; each cut event and every event sharing its
/// bucket go to the earlier segment.
pub fn chronological_counts(stream: &EdgeStream, ratios: ChronoRatios) -> Result<ChronoCounts> {
    if !(ratios.train > 0.0 && ratios.val >= 0.0 && ratios.train + ratios.val < 1.0) {
        return Err(Error::Config(alloc::format!(
            "chronological ratios must satisfy 0 < train, 0 <= val, train + val < 1 (got {}, {})",
            ratios.train,
            ratios.val
        )));
    }
    let events = stream.events();
    let n = events.len();
    if n == 0 {
        return Err(Error::EmptyStream);
    }
    let pos = |frac: f64| ((frac * n as f64) as usize).min(n - 1);
    let train_last = events[pos(ratios.train)].t_bucketed;
    let val_last = events[pos(ratios.train + ratios.val)].t_bucketed;
    let train = events.partition_point(|e| e.t_bucketed <= train_last);
    let val_end = events.partition_point(|e| e.t_bucketed <= val_last);
    Ok(ChronoCounts {
        train,
        val: val_end - train,
        test: n - val_end,
        train_last_bucket: train_last,
        val_last_bucket: val_last,
    })
}

/// Ratio-based chronological split (0.7/0.15/0.15 by default). Not part of
/// the day-anchored protocol.
pub fn chronological_split(
    stream: &EdgeStream,
    ratios: ChronoRatios,
) -> Result<ChronologicalSplit> {
    let counts = chronological_counts(stream, ratios)?;
    if counts.has_empty_segment() {
        return Err(Error::EmptySplit {
            train: counts.train,
            val: counts.val,
            test: counts.test,
        });
    }
    let events = stream.events();
    let val_end = counts.train + counts.val;
    Ok(ChronologicalSplit {
        train: stream.with_events(events[..counts.train].to_vec()),
        val: stream.with_events(events[counts.train..val_end].to_vec()),
        test: stream.with_events(events[val_end..].to_vec()),
        counts,
    })
}

/// First problem found by [`verify_no_leakage`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LeakageViolation {
    /// An event sits in a segment its raw timestamp does not belong to.
    Misplaced {
        split: usize,
        segment: Segment,
        expected: Segment,
        event: Event,
    },
    /// Segments overlap in time.
    Overlap {
        split: usize,
        earlier: Segment,
        later: Segment,
    },
    BoundaryMismatch {
        split: usize,
    },
    CountMismatch {
        split: usize,
        segment: Segment,
        expected: usize,
        found: usize,
    },
}

impl fmt::Display for LeakageViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LeakageViolation::Misplaced {
                split,
                segment,
                expected,
                event,
            } => write!(
                f,
                "split {split}: event seq={} ({},{}) t={} is in {segment} but belongs to {expected}",
                event.seq, event.src, event.dst, event.t_orig
            ),
            LeakageViolation::Overlap {
                split,
                earlier,
                later,
            } => write!(f, "split {split}: {earlier} and {later} overlap in time"),
            LeakageViolation::BoundaryMismatch { split } => {
                write!(f, "split {split}: boundaries differ from split 0")
            }
            LeakageViolation::CountMismatch {
                split,
                segment,
                expected,
                found,
            } => write!(
                f,
                "split {split}: {segment} has {found} events, split 0 has {expected}"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeakageReport {
    pub splits_checked: usize,
    pub violation: Option<LeakageViolation>,
}

impl LeakageReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

/// Checks that splits of one raw stream agree on boundaries and counts and
/// that no segment reaches into another's time range.
pub fn verify_no_leakage(splits: &[DatasetSplit]) -> LeakageReport {
    LeakageReport {
        splits_checked: splits.len(),
        violation: first_violation(splits),
    }
}

fn first_violation(splits: &[DatasetSplit]) -> Option<LeakageViolation> {
    for (i, s) in splits.iter().enumerate() {
        for segment in Segment::ALL {
            for e in s.segment(segment).events() {
                let expected = s.boundaries.segment_of(e.t_orig);
                if expected != segment {
                    return Some(LeakageViolation::Misplaced {
                        split: i,
                        segment,
                        expected,
                        event: *e,
                    });
                }
            }
        }
        let span = |seg: Segment| {
            let st = s.segment(seg);
            st.min_t_orig().zip(st.max_t_orig())
        };
        let order = [
            (Segment::Train, Segment::Val),
            (Segment::Val, Segment::Test),
            (Segment::Train, Segment::Test),
        ];
        for (earlier, later) in order {
            if let (Some((_, max_a)), Some((min_b, _))) = (span(earlier), span(later)) {
                if max_a >= min_b {
                    return Some(LeakageViolation::Overlap {
                        split: i,
                        earlier,
                        later,
                    });
                }
            }
        }
    }
    let first = splits.first()?;
    for (i, s) in splits.iter().enumerate().skip(1) {
        if s.boundaries != first.boundaries {
            return Some(LeakageViolation::BoundaryMismatch { split: i });
        }
        for segment in Segment::ALL {
            let expected = first.segment(segment).len();
            let found = s.segment(segment).len();
            if expected != found {
                return Some(LeakageViolation::CountMismatch {
                    split: i,
                    segment,
                    expected,
                    found,
                });
            }
        }
    }
    None
}
