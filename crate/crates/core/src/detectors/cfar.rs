//! Cell-averaging and trimmed-mean CFAR on an energy map.
//!
//! Both detectors compare each cell under test against a scaled local
//! statistic of its surrounding training cells. The velocity axis wraps
//! circularly (the spectrum is periodic); the range axis truncates the
//! window at the edges. The guard box is centered on the cell under test
//! and is excluded from the training set.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::DecisionMatrix;
use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Sliding-window layout and decision scale shared by both CFAR variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CfarConfig<T: Real> {
    pub window_rows: usize,
    pub window_cols: usize,
    pub guard_rows: usize,
    pub guard_cols: usize,
    /// Fraction of the lowest training cells discarded (trimmed mean only).
    pub trim_low: T,
    /// Fraction of the highest training cells discarded (trimmed mean only).
    pub trim_high: T,
    /// Threshold multiplier on the statistic.
    pub scale: T,
}

impl<T: Real> Default for CfarConfig<T> {
    fn default() -> Self {
        CfarConfig {
            window_rows: 9,
            window_cols: 15,
            guard_rows: 3,
            guard_cols: 3,
            trim_low: T::zero(),
            trim_high: real(0.25),
            scale: T::one(),
        }
    }
}

impl<T: Real> CfarConfig<T> {
    pub fn with_scale(mut self, scale: T) -> Self {
        self.scale = scale;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("window_rows", self.window_rows),
            ("window_cols", self.window_cols),
            ("guard_rows", self.guard_rows),
            ("guard_cols", self.guard_cols),
        ] {
            if v % 2 == 0 {
                return Err(Error::invalid(format!("{name} must be odd, got {v}")));
            }
        }
        if self.window_rows <= self.guard_rows || self.window_cols <= self.guard_cols {
            return Err(Error::invalid(format!(
                "window {}x{} must strictly exceed the guard box {}x{}",
                self.window_rows, self.window_cols, self.guard_rows, self.guard_cols
            )));
        }
        let zero = T::zero();
        if self.trim_low < zero || self.trim_high < zero {
            return Err(Error::invalid("trim fractions must be non-negative"));
        }
        if self.trim_low + self.trim_high >= T::one() {
            return Err(Error::invalid("trim fractions must sum below 1"));
        }
        if !(self.scale >= zero) || !self.scale.is_finite() {
            return Err(Error::invalid("scale must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Which training-cell statistic the window computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfarKind {
    CellAveraging,
    TrimmedMean,
}

fn mean<T: Real>(cells: &[T]) -> T {
    if cells.is_empty() {
        return T::zero();
    }
    let mut acc = T::zero();
    for &c in cells {
        acc += c;
    }
    acc / real::<T>(cells.len() as f64)
}

/// Per-cell training statistic (plain or trimmed mean) under the window
/// and edge policy. Thresholding is separate so one statistic map can
/// serve a whole scale sweep.
pub fn cfar_statistic_map<T: Real>(
    map: &Array2<T>,
    cfg: &CfarConfig<T>,
    kind: CfarKind,
) -> Result<Array2<T>> {
    cfg.validate()?;
    let (rows, cols) = map.dim();
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("empty map"));
    }
    if cfg.window_cols > cols {
        return Err(Error::invalid(format!(
            "window spans {} velocity cells but the map has only {cols}; \
             the circular window would revisit cells",
            cfg.window_cols
        )));
    }
    if map.iter().any(|&v| v < T::zero() || !v.is_finite()) {
        return Err(Error::invalid("map entries must be finite and non-negative"));
    }

    let hr = (cfg.window_rows / 2) as isize;
    let hc = (cfg.window_cols / 2) as isize;
    let gr = (cfg.guard_rows / 2) as isize;
    let gc = (cfg.guard_cols / 2) as isize;

    let mut cells: Vec<T> = Vec::with_capacity(cfg.window_rows * cfg.window_cols);
    let mut out = Array2::zeros((rows, cols));
    for cut_r in 0..rows as isize {
        for cut_c in 0..cols as isize {
            cells.clear();
            for dr in -hr..=hr {
                let r = cut_r + dr;
                if r < 0 || r >= rows as isize {
                    continue;
                }
                for dc in -hc..=hc {
                    if dr.abs() <= gr && dc.abs() <= gc {
                        continue;
                    }
                    let c = (cut_c + dc).rem_euclid(cols as isize);
                    cells.push(map[(r as usize, c as usize)]);
                }
            }
            let stat = match kind {
                CfarKind::CellAveraging => mean(&cells),
                CfarKind::TrimmedMean => {
                    let m = cells.len();
                    let lo = (cfg.trim_low.to_f64().expect("validated") * m as f64).floor() as usize;
                    let hi = (cfg.trim_high.to_f64().expect("validated") * m as f64).floor() as usize;
                    if lo + hi >= m && m > 0 {
                        return Err(Error::invalid(format!(
                            "trimming {lo}+{hi} cells empties the {m}-cell training set"
                        )));
                    }
                    if lo == 0 && hi == 0 {
                        // Degenerate trim reduces to the plain mean; keep the
                        // same summation order so the outputs match bit for bit.
                        mean(&cells)
                    } else {
                        cells.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite"));
                        mean(&cells[lo..m - hi])
                    }
                }
            };
            out[(cut_r as usize, cut_c as usize)] = stat;
        }
    }
    Ok(out)
}

/// Thresholds a map against a statistic map: declare where
/// `map > scale * statistic`. A zero statistic therefore declares any
/// strictly positive cell.
pub fn cfar_decide<T: Real>(
    map: &Array2<T>,
    statistics: &Array2<T>,
    scale: T,
) -> Result<DecisionMatrix> {
    if map.dim() != statistics.dim() {
        return Err(Error::shape(format!(
            "map {:?} and statistic map {:?} differ",
            map.dim(),
            statistics.dim()
        )));
    }
    let mut out = Array2::zeros(map.dim());
    ndarray::Zip::from(&mut out)
        .and(map)
        .and(statistics)
        .for_each(|y, &v, &s| *y = u8::from(v > scale * s));
    Ok(out)
}

/// Cell-averaging CFAR: declare where the cell exceeds `scale` times the
/// mean of its training cells.
pub fn ca_cfar<T: Real>(map: &Array2<T>, cfg: &CfarConfig<T>) -> Result<DecisionMatrix> {
    let statistics = cfar_statistic_map(map, cfg, CfarKind::CellAveraging)?;
    cfar_decide(map, &statistics, cfg.scale)
}

/// Trimmed-mean CFAR: as [`ca_cfar`] but the statistic discards the
/// configured fraction of the lowest and highest training cells first,
/// censoring interfering targets inside the window.
pub fn tm_cfar<T: Real>(map: &Array2<T>, cfg: &CfarConfig<T>) -> Result<DecisionMatrix> {
    let statistics = cfar_statistic_map(map, cfg, CfarKind::TrimmedMean)?;
    cfar_decide(map, &statistics, cfg.scale)
}

/// Cell-to-statistic ratio map: thresholding it at a scale factor gives
/// the same detector family as [`cfar_decide`], while letting a sweep
/// reuse one map across many scales. Cells whose training statistic is
/// zero map to infinity when positive (they fire at any scale) and to
/// zero otherwise.
pub fn cfar_score_map<T: Real>(
    map: &Array2<T>,
    cfg: &CfarConfig<T>,
    kind: CfarKind,
) -> Result<Array2<T>> {
    let statistics = cfar_statistic_map(map, cfg, kind)?;
    Ok(ndarray::Zip::from(map)
        .and(&statistics)
        .map_collect(|&v, &s| {
            if s > T::zero() {
                v / s
            } else if v > T::zero() {
                T::infinity()
            } else {
                T::zero()
            }
        }))
}
