//! Per-target detection and per-cell false-alarm accounting.

use crate::detectors::DecisionMatrix;
use crate::error::{Error, Result};
use crate::radar::{Grid, Target};
use crate::scalar::Real;

/// The 3 x 3 index set centered on `(m, l)`, clipped to the grid.
pub fn neighbor_box(m: usize, l: usize, d_r: usize, d_v: usize) -> Result<Vec<(usize, usize)>> {
    if m >= d_r || l >= d_v {
        return Err(Error::invalid(format!(
            "box center ({m}, {l}) lies outside a {d_r} x {d_v} grid"
        )));
    }
    let rows = m.saturating_sub(1)..=(m + 1).min(d_r - 1);
    let mut cells = Vec::with_capacity(9);
    for r in rows {
        for c in l.saturating_sub(1)..=(l + 1).min(d_v - 1) {
            cells.push((r, c));
        }
    }
    Ok(cells)
}

/// Maps targets to their nearest grid bins, one entry per target.
/// Duplicate bins are preserved: two targets sharing a bin still count
/// as two targets.
pub fn target_bins<T: Real>(grid: &Grid<T>, targets: &[Target<T>]) -> Result<Vec<(usize, usize)>> {
    targets
        .iter()
        .map(|t| {
            Ok((
                grid.nearest_range_bin(t.range)?,
                grid.nearest_velocity_bin(t.velocity)?,
            ))
        })
        .collect()
}

/// Raw event tallies behind the detection and false-alarm rates.
/// Merging is associative and commutative, so tallies from frames,
/// replicates, or whole datasets can be combined in any order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DetectionCounts {
    pub targets: u64,
    pub detected: u64,
    pub no_target_cells: u64,
    pub false_alarm_cells: u64,
}

impl DetectionCounts {
    pub fn merge(&mut self, other: DetectionCounts) {
        self.targets += other.targets;
        self.detected += other.detected;
        self.no_target_cells += other.no_target_cells;
        self.false_alarm_cells += other.false_alarm_cells;
    }

    /// Detection rate, undefined when no targets were present.
    pub fn pd(&self) -> Option<f64> {
        (self.targets > 0).then(|| self.detected as f64 / self.targets as f64)
    }

    /// False-alarm rate over the quiet region, undefined when every cell
    /// sat inside some neighbor box.
    pub fn pfa(&self) -> Option<f64> {
        (self.no_target_cells > 0)
            .then(|| self.false_alarm_cells as f64 / self.no_target_cells as f64)
    }
}

/// Rates plus the tallies they were computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub pd: Option<f64>,
    pub pfa: Option<f64>,
    pub counts: DetectionCounts,
}

impl From<DetectionCounts> for MetricReport {
    fn from(counts: DetectionCounts) -> Self {
        MetricReport {
            pd: counts.pd(),
            pfa: counts.pfa(),
            counts,
        }
    }
}

/// Tallies one frame: a target is detected iff any cell of its neighbor
/// box is marked; every cell outside the union of boxes is quiet, and a
/// marked quiet cell is a false alarm.
pub fn frame_counts(
    decisions: &DecisionMatrix,
    targets: &[(usize, usize)],
) -> Result<DetectionCounts> {
    let (d_r, d_v) = decisions.dim();
    let mut protected = vec![false; d_r * d_v];
    let mut counts = DetectionCounts {
        targets: targets.len() as u64,
        ..DetectionCounts::default()
    };
    for &(m, l) in targets {
        let mut hit = false;
        for (r, c) in neighbor_box(m, l, d_r, d_v)? {
            protected[r * d_v + c] = true;
            if decisions[(r, c)] != 0 {
                hit = true;
            }
        }
        if hit {
            counts.detected += 1;
        }
    }
    for ((r, c), &d) in decisions.indexed_iter() {
        if !protected[r * d_v + c] {
            counts.no_target_cells += 1;
            if d != 0 {
                counts.false_alarm_cells += 1;
            }
        }
    }
    Ok(counts)
}

/// Tallies a whole dataset of aligned decision matrices and per-frame
/// target bin lists.
pub fn dataset_counts(
    decisions: &[DecisionMatrix],
    targets: &[Vec<(usize, usize)>],
) -> Result<DetectionCounts> {
    if decisions.len() != targets.len() {
        return Err(Error::invalid(format!(
            "{} decision frames but {} target lists",
            decisions.len(),
            targets.len()
        )));
    }
    let mut total = DetectionCounts::default();
    for (d, t) in decisions.iter().zip(targets) {
        total.merge(frame_counts(d, t)?);
    }
    Ok(total)
}

/// Dataset-level detection rate; `None` when the dataset holds no targets.
pub fn compute_pd(
    decisions: &[DecisionMatrix],
    targets: &[Vec<(usize, usize)>],
) -> Result<Option<f64>> {
    Ok(dataset_counts(decisions, targets)?.pd())
}

/// Dataset-level false-alarm rate; `None` when no quiet cells remain.
pub fn compute_pfa(
    decisions: &[DecisionMatrix],
    targets: &[Vec<(usize, usize)>],
) -> Result<Option<f64>> {
    Ok(dataset_counts(decisions, targets)?.pfa())
}
