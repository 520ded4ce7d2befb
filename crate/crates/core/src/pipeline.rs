//! One evaluation cell: warm a predictor on history at the training
//! granularity, then stream the evaluation segment at the test granularity
//! in fixed-size batches, scoring each batch before the predictor sees it.

use alloc::format;
use alloc::vec::Vec;

use crate::edgebank::{InitContext, LinkPredictor};
use crate::error::{Error, Result};
use crate::metrics::{RunMetrics, ScoredSample};
use crate::negsampling::{BatchNegatives, NegativeSource};
use crate::split::{DatasetSplit, Segment};
use crate::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellOptions {
    pub segment: Segment,
    pub batch_size: usize,
}

impl Default for CellOptions {
    fn default() -> Self {
        CellOptions {
            segment: Segment::Test,
            batch_size: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CellOutcome {
    /// Per batch: positives in stream order, then that batch's negatives.
    pub samples: Vec<ScoredSample>,
    pub negatives: Vec<BatchNegatives>,
    pub fallback: usize,
    pub metrics: Result<RunMetrics>,
}

/// Runs one (train granularity, test granularity) cell.
///
/// `history_split` supplies the warm-up events and must be bucketed at the
/// training granularity; `eval_split` supplies the evaluation segment at
/// the test granularity. Both must share boundaries.
pub fn run_cell(
    history_split: &DatasetSplit,
    eval_split: &DatasetSplit,
    predictor: &mut dyn LinkPredictor,
    negatives: &mut dyn NegativeSource,
    opts: &CellOptions,
) -> Result<CellOutcome> {
    if opts.batch_size == 0 {
        return Err(Error::Config("batch_size must be at least 1".into()));
    }
    if opts.segment == Segment::Train {
        return Err(Error::Config(
            "evaluation segment must be val or test".into(),
        ));
    }
    let (a, b) = (&history_split.boundaries, &eval_split.boundaries);
    if a != b {
        return Err(Error::BoundaryMismatch {
            left_train_end: a.train_end_t,
            left_val_end: a.val_end_t,
            right_train_end: b.train_end_t,
            right_val_end: b.val_end_t,
        });
    }

    let warmup = history_split.history(opts.segment);
    let ctx = InitContext {
        granularity: history_split.train.granularity(),
        val_span_seconds: a.val_span(),
    };
    predictor.init(&warmup, &ctx)?;

    let stream = eval_split.segment(opts.segment);
    let mut samples = Vec::with_capacity(stream.len() * 2);
    let mut dumps = Vec::new();
    let mut fallback = 0;
    let mut updated_through: Option<Timestamp> = None;

    for (batch_idx, batch) in stream.events().chunks(opts.batch_size).enumerate() {
        let now = batch[0].t_bucketed;
        if updated_through.is_some_and(|t| t > now) {
            return Err(Error::Predictor(format!(
                "batch {batch_idx} at t={now} scored after an update at a later time"
            )));
        }
        let negs = negatives.negatives(batch_idx, batch)?;
        let mut candidates = Vec::with_capacity(batch.len() + negs.pairs.len());
        candidates.extend(batch.iter().map(|e| e.edge()));
        candidates.extend_from_slice(&negs.pairs);

        let scores = predictor.score_batch(&candidates, now)?;
        if scores.len() != candidates.len() {
            return Err(Error::Predictor(format!(
                "{} returned {} scores for {} candidates",
                predictor.name(),
                scores.len(),
                candidates.len()
            )));
        }
        if let Some(bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::Predictor(format!(
                "{} returned score {bad} outside [0, 1]",
                predictor.name()
            )));
        }
        for (i, &score) in scores.iter().enumerate() {
            samples.push(ScoredSample {
                score,
                positive: i < batch.len(),
            });
        }
        fallback += negs.fallback;
        dumps.push(negs);

        predictor.update(batch)?;
        updated_through = batch.iter().map(|e| e.t_bucketed).max();
    }

    let metrics = RunMetrics::from_samples(&samples, fallback);
    Ok(CellOutcome {
        samples,
        negatives: dumps,
        fallback,
        metrics,
    })
}
