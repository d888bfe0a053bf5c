//! Dwell conditioning: real-valued network inputs and model-based
//! range-Doppler projections.
//!
//! The two marginal networks look at the same dwell from different sides.
//! The range branch works on the transposed dwell so each row is one chirp
//! holding the full fast-time (range) record; the Doppler branch keeps the
//! dwell as-is so each row is one fast-time sample holding the slow-time
//! (Doppler) record. Rows pass through column centering, optional column
//! standardization, and a real/imaginary split before hitting the network.
//!
//! The projection map is the classical matched transform: magnitudes of
//! the dwell correlated against every steering pair on the search grid.

use ndarray::Array2;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radar::ComplexFrame;
use crate::scalar::{real, Real};

/// Which marginal a network predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionAxis {
    Range,
    Doppler,
}

impl DetectionAxis {
    pub fn label(self) -> &'static str {
        match self {
            DetectionAxis::Range => "range",
            DetectionAxis::Doppler => "doppler",
        }
    }
}

/// Input conditioning selector for one marginal network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessMode {
    pub axis: DetectionAxis,
    /// Divide each centered column by its RMS magnitude. Off by default;
    /// worth enabling on recorded clutter whose power drifts across files.
    pub standardize: bool,
}

impl PreprocessMode {
    pub fn range() -> Self {
        PreprocessMode {
            axis: DetectionAxis::Range,
            standardize: false,
        }
    }

    pub fn doppler() -> Self {
        PreprocessMode {
            axis: DetectionAxis::Doppler,
            standardize: false,
        }
    }

    pub fn with_standardization(mut self) -> Self {
        self.standardize = true;
        self
    }
}

/// Conditions a dwell into the real matrix a marginal network consumes.
///
/// Range mode transposes first, Doppler mode does not, so the output is
/// K x 2N or N x 2K respectively: every column of the oriented complex
/// matrix is centered (and optionally standardized), then real and
/// imaginary parts are concatenated along the column axis.
pub fn preprocess<T: Real>(x: &ComplexFrame<T>, mode: PreprocessMode) -> Array2<T> {
    let mut oriented = match mode.axis {
        DetectionAxis::Range => x.t().to_owned(),
        DetectionAxis::Doppler => x.clone(),
    };
    let rows = oriented.nrows();
    let inv_rows = real::<T>(rows as f64).recip();
    for mut col in oriented.columns_mut() {
        let mean = col.iter().fold(Complex::new(T::zero(), T::zero()), |a, z| a + z)
            * inv_rows;
        col.mapv_inplace(|z| z - mean);
        if mode.standardize {
            let msd: T = col.iter().map(|z| z.norm_sqr()).sum::<T>() * inv_rows;
            let denom = msd.sqrt().max(real(1e-12));
            col.mapv_inplace(|z| z / denom);
        }
    }
    let cols = oriented.ncols();
    let mut out = Array2::zeros((rows, 2 * cols));
    for ((i, j), z) in oriented.indexed_iter() {
        out[(i, j)] = z.re;
        out[(i, j + cols)] = z.im;
    }
    out
}

fn check_projection_dims<T: Real>(
    x: &ComplexFrame<T>,
    rmat: &Array2<Complex<T>>,
    vmat: &Array2<Complex<T>>,
) -> Result<()> {
    if rmat.nrows() != x.nrows() || vmat.nrows() != x.ncols() {
        return Err(Error::invalid(format!(
            "steering shapes {:?} / {:?} do not conform with dwell {:?}",
            rmat.dim(),
            vmat.dim(),
            x.dim()
        )));
    }
    Ok(())
}

/// Matched-filter magnitude map `|R^H X V*|`, one row per range bin and
/// one column per velocity bin.
pub fn projection_map<T: Real>(
    x: &ComplexFrame<T>,
    rmat: &Array2<Complex<T>>,
    vmat: &Array2<Complex<T>>,
) -> Result<Array2<T>> {
    check_projection_dims(x, rmat, vmat)?;
    let rh = rmat.t().mapv(|z| z.conj());
    let vc = vmat.mapv(|z| z.conj());
    let z = rh.dot(x).dot(&vc);
    Ok(z.mapv(|c| c.norm()))
}

/// Conventional range-Doppler energy map, the element-wise square of the
/// projection map. At bin frequencies this equals a 2D DFT magnitude
/// squared without padding or interpolation.
pub fn energy_map<T: Real>(
    x: &ComplexFrame<T>,
    rmat: &Array2<Complex<T>>,
    vmat: &Array2<Complex<T>>,
) -> Result<Array2<T>> {
    Ok(projection_map(x, rmat, vmat)?.mapv(|v| v * v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radar::{noise_frame, steering_matrices, ComplexFrame, Grid, RadarParams, Target};
    use crate::seeds;
    use ndarray::Array2;
    use proptest::prelude::*;

    fn params() -> RadarParams<f64> {
        RadarParams::default()
    }

    #[test]
    fn identical_rows_center_to_zero() {
        let x: ComplexFrame<f64> = Array2::from_elem((8, 8), Complex::new(2.0, -1.0));
        let z0 = preprocess(&x, PreprocessMode::doppler());
        assert!(z0.iter().all(|v| v.abs() == 0.0));
    }

    #[test]
    fn doppler_mode_shape_is_n_by_2k() {
        let p = params();
        let x = noise_frame(&p, &mut seeds::stream_rng(1, 0));
        assert_eq!(preprocess(&x, PreprocessMode::doppler()).dim(), (64, 128));
        assert_eq!(preprocess(&x, PreprocessMode::range()).dim(), (64, 128));
        let p2 = RadarParams::<f64> {
            samples_per_chirp: 16,
            ..p
        };
        let x2 = noise_frame(&p2, &mut seeds::stream_rng(1, 1));
        assert_eq!(preprocess(&x2, PreprocessMode::doppler()).dim(), (16, 128));
        assert_eq!(preprocess(&x2, PreprocessMode::range()).dim(), (64, 32));
    }

    #[test]
    fn hand_case_two_by_two() {
        let x = ndarray::array![
            [Complex::new(1.0, 1.0), Complex::new(2.0, 0.0)],
            [Complex::new(3.0, 1.0), Complex::new(4.0, 0.0)]
        ];
        let z0 = preprocess(&x, PreprocessMode::doppler());
        let expect: Array2<f64> = ndarray::array![[-1.0, -1.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0]];
        assert_eq!(z0.dim(), (2, 4));
        for (a, b) in z0.iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn centered_columns_sum_to_zero() {
        let p = params();
        let x = noise_frame(&p, &mut seeds::stream_rng(2, 0));
        for mode in [PreprocessMode::range(), PreprocessMode::doppler()] {
            let z0 = preprocess(&x, mode);
            for col in z0.columns() {
                let sum: f64 = col.sum();
                let norm: f64 = col.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!(sum.abs() <= 1e-6 * (norm + 1.0));
            }
        }
    }

    #[test]
    fn centering_is_idempotent() {
        let p = params();
        let x = noise_frame(&p, &mut seeds::stream_rng(3, 0));
        let once = preprocess(&x, PreprocessMode::doppler());
        // Re-run centering on the already-centered complex matrix.
        let cols = x.ncols();
        let mut complex_once = Array2::zeros((x.nrows(), cols));
        for ((i, j), v) in complex_once.indexed_iter_mut() {
            *v = Complex::new(once[(i, j)], once[(i, j + cols)]);
        }
        let twice = preprocess(&complex_once, PreprocessMode::doppler());
        for (a, b) in once.iter().zip(twice.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn frobenius_norm_ignores_global_phase() {
        let p = params();
        let x = noise_frame(&p, &mut seeds::stream_rng(4, 0));
        let rotated = x.mapv(|z| z * Complex::from_polar(1.0, 1.234));
        for mode in [PreprocessMode::range(), PreprocessMode::doppler()] {
            let a = preprocess(&x, mode);
            let b = preprocess(&rotated, mode);
            let fa: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            let fb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((fa - fb).abs() < 1e-9);
        }
    }

    #[test]
    fn standardization_yields_unit_rms_columns() {
        let p = params();
        let x = noise_frame(&p, &mut seeds::stream_rng(5, 0));
        let z0 = preprocess(&x, PreprocessMode::doppler().with_standardization());
        let (rows, total) = z0.dim();
        let cols = total / 2;
        for j in 0..cols {
            let mut msd = 0.0;
            for i in 0..rows {
                msd += z0[(i, j)].powi(2) + z0[(i, j + cols)].powi(2);
            }
            msd /= rows as f64;
            assert!((msd - 1.0).abs() < 1e-9, "column {j} rms {msd}");
        }
    }

    #[test]
    fn standardization_survives_constant_columns() {
        let x: ComplexFrame<f64> = Array2::from_elem((8, 8), Complex::new(5.0, 5.0));
        let z0 = preprocess(&x, PreprocessMode::doppler().with_standardization());
        assert!(z0.iter().all(|v| v.is_finite() && *v == 0.0));
    }

    #[test]
    fn projection_of_zero_is_zero() {
        let p = params();
        let grid = Grid::default_for(&p).unwrap();
        let (r, v) = steering_matrices(&p, &grid);
        let x: ComplexFrame<f64> = Array2::zeros((64, 64));
        let z = projection_map(&x, &r, &v).unwrap();
        assert!(z.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn on_grid_target_peaks_at_its_cell() {
        let p = params();
        let grid = Grid::default_for(&p).unwrap();
        let (rmat, vmat) = steering_matrices(&p, &grid);
        let (m, l) = (11, 40);
        let t = Target {
            range: grid.range_bins()[m],
            velocity: grid.velocity_bins()[l],
            scnr_db: 0.0,
            phase: 0.0,
            amplitude: 1.0,
        };
        let x = crate::radar::target_echo(&p, &t);
        let z = projection_map(&x, &rmat, &vmat).unwrap();
        assert!((z[(m, l)] - 4096.0).abs() < 1e-6);
        let mut peak = (0, 0);
        let mut best = -1.0;
        for ((i, j), &val) in z.indexed_iter() {
            if val > best {
                best = val;
                peak = (i, j);
            }
        }
        assert_eq!(peak, (m, l));
        // Default bins sit on DFT frequencies, so off-target cells vanish.
        for ((i, j), &val) in z.indexed_iter() {
            if (i, j) != (m, l) {
                assert!(val < 1e-6, "leakage {val} at ({i}, {j})");
            }
        }
        let e = energy_map(&x, &rmat, &vmat).unwrap();
        assert!((e[(m, l)] - 4096.0 * 4096.0).abs() / (4096.0 * 4096.0) < 1e-9);
    }

    #[test]
    fn noise_map_mean_square_matches_quadratic_form() {
        let p = params();
        let grid = Grid::default_for(&p).unwrap();
        let (rmat, vmat) = steering_matrices(&p, &grid);
        let mut acc = 0.0;
        let mut cells = 0usize;
        for i in 0..100 {
            let x = noise_frame(&p, &mut seeds::stream_rng(6, i));
            let z = projection_map(&x, &rmat, &vmat).unwrap();
            acc += z.iter().map(|&c| c * c).sum::<f64>();
            cells += z.len();
        }
        let mean = acc / cells as f64;
        let expect = 4096.0;
        assert!((mean - expect).abs() / expect < 0.05, "mean {mean}");
    }

    #[test]
    fn energy_map_is_square_of_projection() {
        let p = params();
        let grid = Grid::default_for(&p).unwrap();
        let (rmat, vmat) = steering_matrices(&p, &grid);
        let x = noise_frame(&p, &mut seeds::stream_rng(7, 0));
        let z = projection_map(&x, &rmat, &vmat).unwrap();
        let e = energy_map(&x, &rmat, &vmat).unwrap();
        for (a, b) in z.iter().zip(e.iter()) {
            assert!((a * a - b).abs() <= 1e-12 * b.max(1.0));
        }
    }

    #[test]
    fn projection_rejects_mismatched_shapes() {
        let p = params();
        let grid = Grid::default_for(&p).unwrap();
        let (rmat, vmat) = steering_matrices(&p, &grid);
        let x: ComplexFrame<f64> = Array2::zeros((32, 64));
        assert!(projection_map(&x, &rmat, &vmat).is_err());
    }

    proptest! {
        #[test]
        fn projection_is_homogeneous(scale in 0.0f64..10.0, seed in 0u64..1000) {
            let p = RadarParams::<f64> {
                samples_per_chirp: 8,
                chirps_per_dwell: 8,
                ..params()
            };
            let grid = Grid::new(&p, 4, 5).unwrap();
            let (rmat, vmat) = steering_matrices(&p, &grid);
            let x = noise_frame(&p, &mut seeds::stream_rng(seed, 0));
            let scaled = x.mapv(|z| z * scale);
            let z = projection_map(&x, &rmat, &vmat).unwrap();
            let zs = projection_map(&scaled, &rmat, &vmat).unwrap();
            for (a, b) in z.iter().zip(zs.iter()) {
                prop_assert!((a * scale - b).abs() <= 1e-9 * (1.0 + b.abs()));
            }
        }
    }
}
