//! Operating-curve sweeps over fixed per-frame score maps.
//!
//! All thresholdable detectors here reduce to "score map, mark cells
//! strictly above t", so a sweep computes each frame's scores once and
//! rethresholds. On fixed scores both rates are non-increasing in the
//! threshold by construction.

use ndarray::Array2;

use super::metrics::{frame_counts, DetectionCounts};
use crate::detectors::DecisionMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Marks every cell whose score strictly exceeds the threshold.
pub fn decisions_at<T: Real>(scores: &Array2<T>, threshold: T) -> DecisionMatrix {
    scores.mapv(|s| u8::from(s > threshold))
}

/// One operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocRow<T: Real> {
    pub threshold: T,
    pub pd: Option<f64>,
    pub pfa: Option<f64>,
    pub counts: DetectionCounts,
}

/// Evaluates every threshold against every frame's fixed score map and
/// returns one row per threshold, sorted ascending.
pub fn roc_sweep<T: Real>(
    scores: &[Array2<T>],
    targets: &[Vec<(usize, usize)>],
    thresholds: &[T],
) -> Result<Vec<RocRow<T>>> {
    if scores.len() != targets.len() {
        return Err(Error::invalid(format!(
            "{} score frames but {} target lists",
            scores.len(),
            targets.len()
        )));
    }
    if thresholds.is_empty() {
        return Err(Error::invalid("threshold grid is empty"));
    }
    if thresholds.iter().any(|t| t.is_nan()) {
        return Err(Error::invalid("thresholds must not be NaN"));
    }
    let mut sorted = thresholds.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    sorted
        .into_iter()
        .map(|t| {
            let mut counts = DetectionCounts::default();
            for (s, bins) in scores.iter().zip(targets) {
                counts.merge(frame_counts(&decisions_at(s, t), bins)?);
            }
            Ok(RocRow {
                threshold: t,
                pd: counts.pd(),
                pfa: counts.pfa(),
                counts,
            })
        })
        .collect()
}
