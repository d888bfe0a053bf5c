//! Empirical threshold calibration against a false-alarm target.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Outcome of a calibration sweep. `achieved` is false when even the
/// largest candidate threshold left the false-alarm rate above target;
/// the returned threshold is then that largest candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration<T: Real> {
    pub threshold: T,
    pub achieved_pfa: f64,
    pub achieved: bool,
}

/// Sweeps an ascending threshold grid, measuring the empirical
/// false-alarm rate at every point with `pfa_at`, and returns the
/// smallest threshold whose rate is at or below `target_pfa`.
///
/// Every grid point is evaluated (in ascending order) so the fallback
/// can report the rate actually measured at the largest candidate.
pub fn calibrate_threshold<T, F>(grid: &[T], target_pfa: f64, mut pfa_at: F) -> Result<Calibration<T>>
where
    T: Real,
    F: FnMut(T) -> Result<f64>,
{
    if grid.is_empty() {
        return Err(Error::invalid("threshold grid is empty"));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("threshold grid must be strictly ascending"));
    }
    if !(0.0..=1.0).contains(&target_pfa) {
        return Err(Error::invalid("target false-alarm rate must lie in [0, 1]"));
    }
    let mut rates = Vec::with_capacity(grid.len());
    for &t in grid {
        let rate = pfa_at(t)?;
        if !(0.0..=1.0).contains(&rate) {
            return Err(Error::numeric(format!(
                "measured false-alarm rate {rate} is not a probability"
            )));
        }
        rates.push(rate);
    }
    for (&t, &rate) in grid.iter().zip(&rates) {
        if rate <= target_pfa {
            return Ok(Calibration {
                threshold: t,
                achieved_pfa: rate,
                achieved: true,
            });
        }
    }
    Ok(Calibration {
        threshold: *grid.last().unwrap(),
        achieved_pfa: *rates.last().unwrap(),
        achieved: false,
    })
}

/// Builds candidate thresholds from a pool of observed detector scores.
///
/// The candidates are drawn from the upper tail of the sorted pool,
/// spanning exceedance fractions of roughly half to twice `target_pfa`,
/// so a subsequent sweep brackets the target. Returns at most `count`
/// strictly ascending values (duplicates in the pool collapse).
pub fn tail_threshold_grid<T: Real>(
    values: &[T],
    target_pfa: f64,
    count: usize,
) -> Result<Vec<T>> {
    if values.is_empty() {
        return Err(Error::invalid("score pool is empty"));
    }
    if !(target_pfa > 0.0 && target_pfa <= 1.0) {
        return Err(Error::invalid("target false-alarm rate must lie in (0, 1]"));
    }
    if count == 0 {
        return Err(Error::invalid("candidate count must be positive"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("score pool contains non-finite values"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
    let n = sorted.len();
    let lo = ((0.5 * target_pfa * n as f64).floor() as usize).min(n - 1);
    let hi = ((2.0 * target_pfa * n as f64).ceil() as usize).clamp(lo, n - 1);
    let mut grid = Vec::with_capacity(count);
    for i in 0..count {
        let frac = if count == 1 {
            0.0
        } else {
            i as f64 / (count - 1) as f64
        };
        let idx = lo + ((hi - lo) as f64 * frac).round() as usize;
        grid.push(sorted[idx]);
    }
    grid.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    Ok(grid)
}
