//! Adaptive normalized matched filter over per-range slow-time vectors.
//!
//! Each range bin's slow-time vector is tested against every velocity
//! steering vector after whitening by a covariance estimate built from
//! the other range bins of the same frame. The estimate is a fixed-point
//! normalized sample covariance: each pass reweights every secondary
//! vector by the inverse of its current whitened power, which removes the
//! texture component of compound-Gaussian clutter. Diagonal loading keeps
//! every iterate invertible even when the secondary set is smaller than
//! the slow-time dimension, and the final estimate is trace-normalized.
//!
//! An optional fast-time taper (raised-cosine window) suppresses range
//! sidelobes before the per-range projection.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::DecisionMatrix;
use crate::error::{Error, Result};
use crate::linalg::{cholesky_lower, conj_dot, norm_sq, solve_lower};
use crate::radar::{steering_matrices, ComplexFrame, Grid, RadarParams};
use crate::scalar::{real, Real};

/// Adaptive matched filter settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnmfConfig<T: Real> {
    /// Range bins excluded on each side of the cell under test when
    /// collecting secondary data.
    pub guard_range_cells: usize,
    /// Fixed-point passes of the covariance estimator.
    pub cov_iterations: usize,
    /// Apply the raised-cosine taper to each fast-time column.
    pub taper: bool,
    /// Detection threshold on the statistic.
    pub threshold: T,
}

impl<T: Real> Default for AnmfConfig<T> {
    fn default() -> Self {
        AnmfConfig {
            guard_range_cells: 4,
            cov_iterations: 3,
            taper: true,
            threshold: real(0.5),
        }
    }
}

impl<T: Real> AnmfConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold >= T::zero() && self.threshold < T::one()) {
            return Err(Error::invalid("threshold must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Symmetric raised-cosine window of length `n` with zero endpoints.
pub fn raised_cosine_window<T: Real>(n: usize) -> Array1<T> {
    if n == 1 {
        return Array1::from_elem(1, T::one());
    }
    let half = real::<T>(0.5);
    let step = real::<T>(2.0 * std::f64::consts::PI / (n - 1) as f64);
    Array1::from_iter((0..n).map(|i| half * (T::one() - (step * real::<T>(i as f64)).cos())))
}

const RELATIVE_LOADING: f64 = 1e-6;

fn load_diagonal<T: Real>(sigma: &mut Array2<Complex<T>>) {
    let k = sigma.nrows();
    let mut trace = T::zero();
    for i in 0..k {
        trace += sigma[(i, i)].re;
    }
    let delta = real::<T>(RELATIVE_LOADING) * trace / real::<T>(k as f64);
    for i in 0..k {
        sigma[(i, i)] += Complex::new(delta, T::zero());
    }
}

/// Fixed-point normalized covariance estimate from secondary vectors
/// (one per row).
///
/// Starts from the diagonally loaded sample covariance, then runs
/// `iterations` reweighting passes; every iterate is loaded the same way
/// so rank deficiency of small secondary sets never breaks the inverse.
/// The result has trace equal to its dimension, making the estimate
/// invariant to a common rescaling of the secondary data.
pub fn fixed_point_covariance<T: Real>(
    secondary: &Array2<Complex<T>>,
    iterations: usize,
) -> Result<Array2<Complex<T>>> {
    let (count, k) = secondary.dim();
    if count == 0 {
        return Err(Error::invalid("secondary set is empty"));
    }
    if k == 0 {
        return Err(Error::invalid("secondary vectors are empty"));
    }

    let kk = real::<T>(k as f64);
    let mut sigma: Array2<Complex<T>> = Array2::zeros((k, k));
    for x in secondary.axis_iter(Axis(0)) {
        accumulate_outer(&mut sigma, x, T::one());
    }
    let inv_count = real::<T>(count as f64).recip();
    sigma.mapv_inplace(|v| v * inv_count);

    let mut trace = T::zero();
    for i in 0..k {
        trace += sigma[(i, i)].re;
    }
    if !(trace > T::zero()) {
        // Degenerate all-zero secondary data carries no spectral
        // information; fall back to a neutral whitener.
        return Ok(Array2::eye(k));
    }
    load_diagonal(&mut sigma);

    let scale = kk / real::<T>(count as f64);
    for _ in 0..iterations {
        let l = cholesky_lower(&sigma)?;
        let mut next: Array2<Complex<T>> = Array2::zeros((k, k));
        for x in secondary.axis_iter(Axis(0)) {
            let w = solve_lower(&l, x);
            let q = norm_sq(w.view());
            if q > T::zero() {
                accumulate_outer(&mut next, x, scale / q);
            }
        }
        load_diagonal(&mut next);
        sigma = next;
    }

    let mut trace = T::zero();
    for i in 0..k {
        trace += sigma[(i, i)].re;
    }
    let norm = kk / trace;
    sigma.mapv_inplace(|v| v * norm);
    Ok(sigma)
}

fn accumulate_outer<T: Real>(sigma: &mut Array2<Complex<T>>, x: ArrayView1<Complex<T>>, w: T) {
    let k = x.len();
    for i in 0..k {
        let xi = x[i] * w;
        for j in 0..k {
            sigma[(i, j)] += xi * x[j].conj();
        }
    }
}

/// Normalized matched-filter statistic of `x` against steering `p` under
/// covariance `sigma`: the squared whitened correlation coefficient,
/// which lies in `[0, 1]`. A zero vector on either side yields 0.
pub fn anmf_statistic<T: Real>(
    x: ArrayView1<Complex<T>>,
    p: ArrayView1<Complex<T>>,
    sigma: &Array2<Complex<T>>,
) -> Result<T> {
    let k = x.len();
    if p.len() != k || sigma.dim() != (k, k) {
        return Err(Error::shape(format!(
            "statistic needs matching lengths, got x {} / p {} / sigma {:?}",
            k,
            p.len(),
            sigma.dim()
        )));
    }
    let l = cholesky_lower(sigma)?;
    let u = solve_lower(&l, p);
    let w = solve_lower(&l, x);
    let den = norm_sq(u.view()) * norm_sq(w.view());
    if !(den > T::zero()) {
        return Ok(T::zero());
    }
    let num = conj_dot(u.view(), w.view()).norm_sqr();
    Ok((num / den).min(T::one()))
}

/// Per-cell statistic map of the adaptive matched filter.
///
/// The frame's fast-time columns are optionally tapered, projected onto
/// the range steering vectors, and each resulting slow-time vector is
/// tested against every velocity steering vector. Secondary data for a
/// range cell are the slow-time vectors of all other range bins outside
/// the guard interval.
pub fn anmf_statistic_map<T: Real>(
    frame: &ComplexFrame<T>,
    params: &RadarParams<T>,
    grid: &Grid<T>,
    cfg: &AnmfConfig<T>,
) -> Result<Array2<T>> {
    cfg.validate()?;
    if frame.dim() != (params.n(), params.k()) {
        return Err(Error::shape(format!(
            "frame {:?} does not match the {}x{} dwell",
            frame.dim(),
            params.n(),
            params.k()
        )));
    }
    let d_r = grid.num_range_bins();
    let d_v = grid.num_velocity_bins();
    if d_r < 2 + 2 * cfg.guard_range_cells {
        return Err(Error::invalid(format!(
            "{d_r} range bins leave no secondary data outside the guard interval"
        )));
    }

    let (rmat, vmat) = steering_matrices(params, grid);
    let tapered = if cfg.taper {
        let window = raised_cosine_window::<T>(params.n());
        let mut x = frame.clone();
        for (mut row, &h) in x.rows_mut().into_iter().zip(window.iter()) {
            row.mapv_inplace(|v| v * h);
        }
        x
    } else {
        frame.clone()
    };

    // Row m holds the slow-time vector of range bin m.
    let slow_time = rmat.t().mapv(|z| z.conj()).dot(&tapered);

    let mut map = Array2::zeros((d_r, d_v));
    for m in 0..d_r {
        let lo = m.saturating_sub(cfg.guard_range_cells);
        let hi = (m + cfg.guard_range_cells).min(d_r - 1);
        let secondary_rows: Vec<usize> = (0..d_r).filter(|&i| i < lo || i > hi).collect();
        if secondary_rows.is_empty() {
            return Err(Error::invalid(format!(
                "range bin {m} has no secondary data outside its guard interval"
            )));
        }
        let mut secondary = Array2::zeros((secondary_rows.len(), params.k()));
        for (dst, &src) in secondary_rows.iter().enumerate() {
            secondary.row_mut(dst).assign(&slow_time.row(src));
        }
        let sigma = fixed_point_covariance(&secondary, cfg.cov_iterations)?;
        let x = slow_time.row(m);
        for l in 0..d_v {
            map[(m, l)] = anmf_statistic(x, vmat.column(l), &sigma)?;
        }
    }
    Ok(map)
}

/// Adaptive matched-filter detector: declare where the statistic exceeds
/// the configured threshold.
pub fn anmf_detect<T: Real>(
    frame: &ComplexFrame<T>,
    params: &RadarParams<T>,
    grid: &Grid<T>,
    cfg: &AnmfConfig<T>,
) -> Result<DecisionMatrix> {
    let map = anmf_statistic_map(frame, params, grid, cfg)?;
    Ok(map.mapv(|s| u8::from(s > cfg.threshold)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radar::{compose_frame, noise_frame, Target};
    use crate::scalar::draw_standard_normal;
    use crate::seeds;
    use ndarray::array;

    fn standard_complex_rows(count: usize, k: usize, seed: u64) -> Array2<Complex<f64>> {
        let mut rng = seeds::stream_rng(seed, 0);
        let mut data = Vec::with_capacity(count * k);
        let root_half = 0.5f64.sqrt();
        for _ in 0..count * k {
            let re: f64 = draw_standard_normal(&mut rng);
            let im: f64 = draw_standard_normal(&mut rng);
            data.push(Complex::new(re * root_half, im * root_half));
        }
        Array2::from_shape_vec((count, k), data).unwrap()
    }

    #[test]
    fn estimator_recovers_identity_from_white_data() {
        let secondary = standard_complex_rows(10_000, 8, 1);
        let sigma = fixed_point_covariance(&secondary, 3).unwrap();
        let mut err = 0.0;
        for i in 0..8 {
            for j in 0..8 {
                let target = if i == j { 1.0 } else { 0.0 };
                err += (sigma[(i, j)] - Complex::new(target, 0.0)).norm_sqr();
            }
        }
        let rel = err.sqrt() / 8.0f64.sqrt();
        assert!(rel <= 0.05, "relative error {rel}");
    }

    #[test]
    fn single_vector_zero_iterations_is_loaded_outer_product() {
        let x = array![Complex::new(1.0, 0.5), Complex::new(-0.25, 2.0)];
        let secondary = x.clone().insert_axis(Axis(0));
        let sigma = fixed_point_covariance(&secondary, 0).unwrap();

        let mut expect = Array2::zeros((2, 2));
        for i in 0..2 {
            for j in 0..2 {
                expect[(i, j)] = x[i] * x[j].conj();
            }
        }
        let trace = expect[(0, 0)].re + expect[(1, 1)].re;
        let delta = 1e-6 * trace / 2.0;
        for i in 0..2 {
            expect[(i, i)] += Complex::new(delta, 0.0);
        }
        let norm = 2.0 / (trace + 2.0 * delta);
        expect.mapv_inplace(|v| v * norm);
        for (a, b) in sigma.iter().zip(expect.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn estimate_is_invariant_to_common_rescaling() {
        let secondary = standard_complex_rows(40, 6, 2);
        let scaled = secondary.mapv(|v| v * 10.0);
        let a = fixed_point_covariance(&secondary, 3).unwrap();
        let b = fixed_point_covariance(&scaled, 3).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).norm() < 1e-9);
        }
    }

    #[test]
    fn empty_and_degenerate_secondary_sets() {
        let empty: Array2<Complex<f64>> = Array2::zeros((0, 4));
        assert!(fixed_point_covariance(&empty, 3).is_err());
        let zeros: Array2<Complex<f64>> = Array2::zeros((5, 4));
        let sigma = fixed_point_covariance(&zeros, 3).unwrap();
        assert_eq!(sigma, Array2::eye(4));
    }

    #[test]
    fn collinear_vector_scores_one() {
        let p = array![
            Complex::new(1.0, 0.0),
            Complex::new(0.0, 1.0),
            Complex::new(-1.0, 0.0)
        ];
        let x = p.mapv(|v| v * Complex::new(0.0, -2.5));
        let sigma = Array2::eye(3);
        let t: f64 = anmf_statistic(x.view(), p.view(), &sigma).unwrap();
        assert!((t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_vector_scores_zero() {
        let p = array![Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)];
        let x = array![Complex::new(0.0, 0.0), Complex::new(3.0, -1.0)];
        let sigma = Array2::eye(2);
        let t: f64 = anmf_statistic(x.view(), p.view(), &sigma).unwrap();
        assert!(t.abs() < 1e-15);
    }

    #[test]
    fn zero_vector_is_guarded_to_zero() {
        let p = array![Complex::new(1.0, 0.0), Complex::new(1.0, 0.0)];
        let x: Array1<Complex<f64>> = Array1::zeros(2);
        let sigma = Array2::eye(2);
        assert_eq!(anmf_statistic(x.view(), p.view(), &sigma).unwrap(), 0.0);
    }

    #[test]
    fn statistic_is_scale_invariant_and_bounded() {
        let mut rng = seeds::stream_rng(3, 0);
        for trial in 0..10_000u64 {
            let k = 4;
            let draw = |rng: &mut _| {
                Array1::from_iter((0..k).map(|_| {
                    Complex::new(draw_standard_normal::<f64, _>(rng), draw_standard_normal(rng))
                }))
            };
            let x = draw(&mut rng);
            let p = draw(&mut rng);
            let a = standard_complex_rows(6, k, 1000 + trial);
            let mut sigma = Array2::eye(k);
            for row in a.axis_iter(Axis(0)) {
                accumulate_outer(&mut sigma, row, 1.0);
            }
            let t = anmf_statistic(x.view(), p.view(), &sigma).unwrap();
            assert!((0.0..=1.0).contains(&t), "trial {trial}: {t}");
            if trial < 100 {
                let xs = x.mapv(|v| v * 3.75);
                let ps = p.mapv(|v| v * Complex::new(0.0, -0.3));
                let ts = anmf_statistic(xs.view(), ps.view(), &sigma).unwrap();
                assert!((t - ts).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn singular_covariance_is_a_numeric_error() {
        let p = array![Complex::new(1.0, 0.0), Complex::new(1.0, 0.0)];
        let x = array![Complex::new(1.0, 0.0), Complex::new(0.0, 1.0)];
        let singular: Array2<Complex<f64>> = Array2::zeros((2, 2));
        assert!(matches!(
            anmf_statistic(x.view(), p.view(), &singular),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn window_is_symmetric_with_zero_endpoints() {
        let w: Array1<f64> = raised_cosine_window(64);
        assert_eq!(w[0], 0.0);
        assert!(w[63].abs() < 1e-15);
        for i in 0..64 {
            assert!((w[i] - w[63 - i]).abs() < 1e-15);
        }
        let odd: Array1<f64> = raised_cosine_window(9);
        assert!((odd[4] - 1.0).abs() < 1e-15);
        let one: Array1<f64> = raised_cosine_window(1);
        assert_eq!(one[0], 1.0);
    }

    fn small_params() -> RadarParams<f64> {
        RadarParams {
            samples_per_chirp: 16,
            chirps_per_dwell: 16,
            ..RadarParams::default()
        }
    }

    #[test]
    fn strong_target_is_detected_at_its_cell() {
        let params = small_params();
        let grid = Grid::new(&params, 12, 9).unwrap();
        let target = Target {
            range: grid.range_bins()[7],
            velocity: grid.velocity_bins()[2],
            scnr_db: 0.0,
            phase: 0.3,
            amplitude: 50.0,
        };
        let noise = noise_frame(&params, &mut seeds::stream_rng(4, 0));
        let quiet: ComplexFrame<f64> = Array2::zeros((16, 16));
        let frame = compose_frame(&params, &[target], &quiet, &noise).unwrap();

        for taper in [false, true] {
            let cfg = AnmfConfig {
                guard_range_cells: 1,
                taper,
                ..AnmfConfig::default()
            };
            let decisions = anmf_detect(&frame, &params, &grid, &cfg).unwrap();
            assert_eq!(decisions[(7, 2)], 1, "taper {taper}");
        }
    }

    #[test]
    fn zero_frame_yields_no_detections() {
        let params = small_params();
        let grid = Grid::new(&params, 12, 9).unwrap();
        let frame: ComplexFrame<f64> = Array2::zeros((16, 16));
        let cfg = AnmfConfig {
            guard_range_cells: 1,
            ..AnmfConfig::default()
        };
        let decisions = anmf_detect(&frame, &params, &grid, &cfg).unwrap();
        assert_eq!(decisions.sum(), 0);
    }

    #[test]
    fn statistic_map_never_exceeds_one() {
        let params = small_params();
        let grid = Grid::new(&params, 12, 9).unwrap();
        for seed in 0..5 {
            let frame = noise_frame(&params, &mut seeds::stream_rng(seed, 0));
            let map = anmf_statistic_map(
                &frame,
                &params,
                &grid,
                &AnmfConfig {
                    guard_range_cells: 1,
                    ..AnmfConfig::default()
                },
            )
            .unwrap();
            assert!(map.iter().all(|&s| (0.0..=1.0).contains(&s)));
        }
    }

    #[test]
    fn guard_interval_must_leave_secondary_data() {
        let params = small_params();
        let grid = Grid::new(&params, 12, 9).unwrap();
        let frame = noise_frame(&params, &mut seeds::stream_rng(9, 0));
        let cfg = AnmfConfig {
            guard_range_cells: 6,
            ..AnmfConfig::default()
        };
        assert!(anmf_statistic_map(&frame, &params, &grid, &cfg).is_err());
        assert!(AnmfConfig { threshold: 1.0, ..AnmfConfig::default() }
            .validate()
            .is_err());
    }
}
