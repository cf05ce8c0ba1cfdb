//! Detection scoring and the forgetting-rate sweep harness.
//!
//! A window containing at least one detection is one true positive no
//! matter how many detections fall inside it; a window with none is a
//! false negative; every detection outside all windows is its own false
//! positive. The score weighs these at +10, -10 and -1 respectively.

use crate::data::{AnomalyWindow, SeriesPoint};
use crate::detect::{self, DetectionRecord, DetectorConfig};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("alpha grid is empty")]
    EmptyGrid,
    #[error("detector run failed: {0}")]
    Run(String),
}

pub const TRUE_POS_UNITS: i64 = 10;
pub const FALSE_POS_UNITS: i64 = -1;
pub const FALSE_NEG_UNITS: i64 = -10;

/// Outcome counts for one run; `true_pos + false_neg` always equals the
/// number of anomaly windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScoreCard {
    pub true_pos: usize,
    pub false_pos: usize,
    pub false_neg: usize,
    pub score: i64,
}

/// Match detections against anomaly windows.
///
/// Detections are expected in timestamp order; windows must be sorted and
/// non-overlapping (the label reader guarantees both).
pub fn score(detections: &[DetectionRecord], windows: &[AnomalyWindow]) -> ScoreCard {
    let mut hit = vec![false; windows.len()];
    let mut false_pos = 0usize;
    for record in detections.iter().filter(|r| r.detected) {
        match windows.iter().position(|w| w.contains(&record.timestamp)) {
            Some(i) => hit[i] = true,
            None => false_pos += 1,
        }
    }
    let true_pos = hit.iter().filter(|&&h| h).count();
    let false_neg = windows.len() - true_pos;
    ScoreCard {
        true_pos,
        false_pos,
        false_neg,
        score: TRUE_POS_UNITS * true_pos as i64
            + FALSE_POS_UNITS * false_pos as i64
            + FALSE_NEG_UNITS * false_neg as i64,
    }
}

/// One grid point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub card: ScoreCard,
}

/// The default forgetting-rate grid: 0.0005 to 0.05 in steps of 0.0005.
pub fn default_alpha_grid() -> Vec<f64> {
    (1..=100).map(|i| i as f64 * 0.0005).collect()
}

/// Score one full detector run per grid point.
///
/// Every run uses `base` with its tracker replaced by an exponentially
/// weighted one at the grid alpha. The whole grid is validated before any
/// run starts; runs are independent and execute in parallel, with rows
/// returned in grid order.
pub fn sweep(
    points: &[SeriesPoint],
    windows: &[AnomalyWindow],
    base: &DetectorConfig,
    alphas: &[f64],
) -> Result<Vec<SweepRow>, EvalError> {
    if alphas.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    for &alpha in alphas {
        if !(alpha.is_finite() && alpha > 0.0 && alpha < 1.0) {
            return Err(EvalError::InvalidAlpha(alpha));
        }
    }
    alphas
        .par_iter()
        .with_max_len(1) // run times vary with alpha; steal one run at a time
        .map(|&alpha| {
            let config = base.with_alpha(alpha);
            let out = detect::run(
                points.iter().map(|p| (p.timestamp.as_str(), p.value)),
                config,
            )
            .map_err(|e| EvalError::Run(format!("alpha {alpha}: {e}")))?;
            Ok(SweepRow {
                alpha,
                card: score(&out.records, windows),
            })
        })
        .collect()
}
