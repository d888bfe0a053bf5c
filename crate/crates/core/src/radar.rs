//! Dwell model for a pulsed LFM-CW radar.
//!
//! A dwell is an N x K complex matrix: N fast-time samples per chirp
//! (rows, range axis) and K chirps (columns, Doppler axis). After
//! dechirping, a point scatterer at range `r` and radial velocity `v`
//! contributes a rank-one frame
//!
//! ```text
//!   A e^{j phi} . r(r) v(v)^T
//! ```
//!
//! where `r(r)[n] = exp(-j 2 pi (2 B r)/(c N) n)` samples the beat
//! frequency and `v(v)[k] = exp(-j 2 pi (2 fc v / c) T0 k)` samples the
//! Doppler progression across chirps. Bin spacings follow directly:
//! `delta_r = c / (2B)` per fast-time DFT bin and
//! `delta_v = c / (2 fc K T0)` per slow-time DFT bin.

use ndarray::{Array1, Array2};
use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{draw_standard_normal, real, Real};

/// Exact SI speed of light in m/s.
pub const SPEED_OF_LIGHT_SI: f64 = 2.997_924_58e8;

/// Conventional rounded propagation speed used by the default profile.
///
/// The stock X-band profile quotes a 3.0 m range bin for a 50 MHz sweep,
/// which holds exactly only with the rounded constant.
pub const SPEED_OF_LIGHT_NOMINAL: f64 = 3.0e8;

/// Complex dwell frame; rows are fast-time samples, columns are chirps.
pub type ComplexFrame<T> = Array2<Complex<T>>;

/// Waveform and front-end description of one radar mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadarParams<T: Real> {
    /// Fast-time samples per chirp (N).
    pub samples_per_chirp: usize,
    /// Chirps per dwell (K).
    pub chirps_per_dwell: usize,
    /// Sweep bandwidth in Hz.
    pub bandwidth: T,
    /// Chirp repetition interval in seconds.
    pub pri: T,
    /// Carrier frequency in Hz.
    pub carrier: T,
    /// Thermal noise power per complex sample (sigma^2).
    pub noise_power: T,
    /// Propagation speed in m/s.
    pub propagation_speed: T,
}

impl<T: Real> Default for RadarParams<T> {
    /// X-band low-PRF profile used across the test suite: 64 x 64 dwell,
    /// 50 MHz sweep, 1 ms PRI, 9.39 GHz carrier, unit noise power.
    fn default() -> Self {
        RadarParams {
            samples_per_chirp: 64,
            chirps_per_dwell: 64,
            bandwidth: real(5e7),
            pri: real(1e-3),
            carrier: real(9.39e9),
            noise_power: real(1.0),
            propagation_speed: real(SPEED_OF_LIGHT_NOMINAL),
        }
    }
}

impl<T: Real> RadarParams<T> {
    /// Fast-time sample count N.
    #[inline]
    pub fn n(&self) -> usize {
        self.samples_per_chirp
    }

    /// Chirp count K.
    #[inline]
    pub fn k(&self) -> usize {
        self.chirps_per_dwell
    }

    /// Range bin spacing `c / (2B)` in meters.
    pub fn range_resolution(&self) -> T {
        self.propagation_speed / (real::<T>(2.0) * self.bandwidth)
    }

    /// Velocity bin spacing `c / (2 fc K T0)` in m/s.
    pub fn velocity_resolution(&self) -> T {
        self.propagation_speed
            / (real::<T>(2.0) * self.carrier * real::<T>(self.chirps_per_dwell as f64) * self.pri)
    }

    /// Expected thermal-noise energy of one dwell, `N K sigma^2`.
    pub fn noise_energy(&self) -> T {
        real::<T>((self.samples_per_chirp * self.chirps_per_dwell) as f64) * self.noise_power
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples_per_chirp == 0 || self.chirps_per_dwell == 0 {
            return Err(Error::invalid("dwell dimensions must be positive"));
        }
        for (name, v) in [
            ("bandwidth", self.bandwidth),
            ("pri", self.pri),
            ("carrier", self.carrier),
            ("propagation_speed", self.propagation_speed),
        ] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite and positive")));
            }
        }
        if !(self.noise_power >= T::zero()) || !self.noise_power.is_finite() {
            return Err(Error::invalid("noise_power must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Search grid: range bins starting at 0 m, velocity bins centered on 0 m/s,
/// both spaced at the waveform resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T: Real> {
    range_bins: Vec<T>,
    velocity_bins: Vec<T>,
    delta_r: T,
    delta_v: T,
}

impl<T: Real> Grid<T> {
    /// Builds the grid implied by `params` with the given bin counts.
    ///
    /// Counts must not exceed the dwell dimensions; past N (or K) bins the
    /// steering vectors repeat and cells stop being distinguishable.
    pub fn new(params: &RadarParams<T>, range_bins: usize, velocity_bins: usize) -> Result<Self> {
        params.validate()?;
        if range_bins == 0 || velocity_bins == 0 {
            return Err(Error::invalid("grid needs at least one bin per axis"));
        }
        if range_bins > params.n() {
            return Err(Error::invalid(format!(
                "{range_bins} range bins exceed the {} resolvable fast-time bins",
                params.n()
            )));
        }
        if velocity_bins > params.k() {
            return Err(Error::invalid(format!(
                "{velocity_bins} velocity bins exceed the {} resolvable slow-time bins",
                params.k()
            )));
        }
        let delta_r = params.range_resolution();
        let delta_v = params.velocity_resolution();
        let half = real::<T>((velocity_bins - 1) as f64 / 2.0);
        Ok(Grid {
            range_bins: (0..range_bins)
                .map(|m| real::<T>(m as f64) * delta_r)
                .collect(),
            velocity_bins: (0..velocity_bins)
                .map(|l| (real::<T>(l as f64) - half) * delta_v)
                .collect(),
            delta_r,
            delta_v,
        })
    }

    /// 32 x 63 grid of the default profile.
    pub fn default_for(params: &RadarParams<T>) -> Result<Self> {
        Grid::new(params, 32, 63)
    }

    pub fn num_range_bins(&self) -> usize {
        self.range_bins.len()
    }

    pub fn num_velocity_bins(&self) -> usize {
        self.velocity_bins.len()
    }

    pub fn range_bins(&self) -> &[T] {
        &self.range_bins
    }

    pub fn velocity_bins(&self) -> &[T] {
        &self.velocity_bins
    }

    pub fn delta_r(&self) -> T {
        self.delta_r
    }

    pub fn delta_v(&self) -> T {
        self.delta_v
    }

    /// Smallest range bin covered, minus half a bin (inclusive label edge).
    pub fn range_span(&self) -> (T, T) {
        (
            self.range_bins[0],
            *self.range_bins.last().expect("non-empty"),
        )
    }

    pub fn velocity_span(&self) -> (T, T) {
        (
            self.velocity_bins[0],
            *self.velocity_bins.last().expect("non-empty"),
        )
    }

    /// Nearest range bin index; ties fall to the lower index. Values more
    /// than half a bin outside the grid are rejected.
    pub fn nearest_range_bin(&self, r: T) -> Result<usize> {
        nearest_bin(r, self.range_bins[0], self.delta_r, self.range_bins.len(), "range")
    }

    /// Nearest velocity bin index with the same tie and edge rules.
    pub fn nearest_velocity_bin(&self, v: T) -> Result<usize> {
        nearest_bin(
            v,
            self.velocity_bins[0],
            self.delta_v,
            self.velocity_bins.len(),
            "velocity",
        )
    }
}

fn nearest_bin<T: Real>(x: T, first: T, delta: T, count: usize, axis: &str) -> Result<usize> {
    let f = (x - first) / delta;
    let half = real::<T>(0.5);
    let upper = real::<T>((count - 1) as f64) + half;
    if !f.is_finite() || f < -half || f > upper {
        return Err(Error::invalid(format!(
            "{axis} value {x} lies outside the grid (more than half a bin past an edge)"
        )));
    }
    let i0 = f.floor();
    let frac = f - i0;
    // Ties (frac exactly one half) resolve toward the lower index.
    let mut idx = i0.to_f64().expect("finite") as i64;
    if frac > half {
        idx += 1;
    }
    Ok(idx.clamp(0, count as i64 - 1) as usize)
}

/// Point scatterer. `amplitude` is derived from the SCNR law during
/// dataset generation and is zero for targets read back from a container.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target<T: Real> {
    pub range: T,
    pub velocity: T,
    pub scnr_db: T,
    pub phase: T,
    pub amplitude: T,
}

/// Fast-time steering vector of length N for a scatterer at range `r`.
pub fn steering_range<T: Real>(params: &RadarParams<T>, r: T) -> Array1<Complex<T>> {
    let n = params.n();
    let inc = -real::<T>(std::f64::consts::TAU) * (real::<T>(2.0) * params.bandwidth * r)
        / (params.propagation_speed * real::<T>(n as f64));
    Array1::from_shape_fn(n, |i| Complex::from_polar(T::one(), inc * real::<T>(i as f64)))
}

/// Slow-time steering vector of length K for radial velocity `v`.
pub fn steering_doppler<T: Real>(params: &RadarParams<T>, v: T) -> Array1<Complex<T>> {
    let k = params.k();
    let inc = -real::<T>(std::f64::consts::TAU)
        * (real::<T>(2.0) * params.carrier * v / params.propagation_speed)
        * params.pri;
    Array1::from_shape_fn(k, |i| Complex::from_polar(T::one(), inc * real::<T>(i as f64)))
}

/// Steering matrices over the whole grid: `(R, V)` with `R` of shape
/// N x d_R and `V` of shape K x d_V, one steering vector per column.
pub fn steering_matrices<T: Real>(
    params: &RadarParams<T>,
    grid: &Grid<T>,
) -> (Array2<Complex<T>>, Array2<Complex<T>>) {
    let mut r = Array2::zeros((params.n(), grid.num_range_bins()));
    for (j, &rng_m) in grid.range_bins().iter().enumerate() {
        r.column_mut(j).assign(&steering_range(params, rng_m));
    }
    let mut v = Array2::zeros((params.k(), grid.num_velocity_bins()));
    for (j, &vel) in grid.velocity_bins().iter().enumerate() {
        v.column_mut(j).assign(&steering_doppler(params, vel));
    }
    (r, v)
}

/// Rank-one dwell contribution of a single target.
pub fn target_echo<T: Real>(params: &RadarParams<T>, target: &Target<T>) -> ComplexFrame<T> {
    let r = steering_range(params, target.range);
    let v = steering_doppler(params, target.velocity);
    let gain = Complex::from_polar(target.amplitude, target.phase);
    let mut frame = Array2::zeros((params.n(), params.k()));
    for (i, rn) in r.iter().enumerate() {
        let row_gain = gain * *rn;
        for (j, vk) in v.iter().enumerate() {
            frame[(i, j)] = row_gain * *vk;
        }
    }
    frame
}

/// White circular complex Gaussian dwell with per-sample power `sigma^2`.
pub fn noise_frame<T: Real, R: Rng + ?Sized>(
    params: &RadarParams<T>,
    rng: &mut R,
) -> ComplexFrame<T> {
    let scale = (params.noise_power / real::<T>(2.0)).sqrt();
    // Samples are drawn in row-major order; the stream layout is part of
    // the reproducibility contract.
    let cells = params.n() * params.k();
    let mut draws = Vec::with_capacity(cells);
    for _ in 0..cells {
        draws.push(Complex::new(
            scale * draw_standard_normal::<T, _>(rng),
            scale * draw_standard_normal::<T, _>(rng),
        ));
    }
    Array2::from_shape_vec((params.n(), params.k()), draws).expect("sized above")
}

/// Target amplitude that realizes `scnr_db` against an interference of
/// total expected energy `interference_energy` over the dwell.
///
/// The echo energy of amplitude A is exactly `A^2 N K`, so
/// `A = sqrt(10^(scnr/10) * E_int / (N K))`. `scnr_db = -inf` is the
/// explicit zero-amplitude case.
pub fn amplitude_for_scnr<T: Real>(
    params: &RadarParams<T>,
    scnr_db: T,
    interference_energy: T,
) -> Result<T> {
    if scnr_db == T::neg_infinity() {
        return Ok(T::zero());
    }
    if !scnr_db.is_finite() {
        return Err(Error::invalid("scnr_db must be finite or -inf"));
    }
    if !(interference_energy > T::zero()) || !interference_energy.is_finite() {
        return Err(Error::invalid("interference energy must be finite and positive"));
    }
    let cells = real::<T>((params.n() * params.k()) as f64);
    let ratio = real::<T>(10.0).powf(scnr_db / real::<T>(10.0));
    Ok((ratio * interference_energy / cells).sqrt())
}

/// Sums target echoes over clutter and noise into one dwell.
pub fn compose_frame<T: Real>(
    params: &RadarParams<T>,
    targets: &[Target<T>],
    clutter: &ComplexFrame<T>,
    noise: &ComplexFrame<T>,
) -> Result<ComplexFrame<T>> {
    let shape = (params.n(), params.k());
    if clutter.dim() != shape || noise.dim() != shape {
        return Err(Error::shape(format!(
            "clutter {:?} / noise {:?} do not match the {:?} dwell",
            clutter.dim(),
            noise.dim(),
            shape
        )));
    }
    let mut frame = clutter + noise;
    for t in targets {
        frame = frame + target_echo(params, t);
    }
    Ok(frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds;

    fn si_params() -> RadarParams<f64> {
        RadarParams {
            propagation_speed: SPEED_OF_LIGHT_SI,
            ..RadarParams::default()
        }
    }

    #[test]
    fn default_profile_resolutions() {
        let p: RadarParams<f64> = RadarParams::default();
        assert_eq!(p.range_resolution(), 3.0);
        let dv = p.velocity_resolution();
        assert!((dv - 0.2496006389776358).abs() < 1e-15);
        // Matches the quoted 0.249 m/s to half a percent.
        assert!((dv - 0.249).abs() / 0.249 < 0.005);
    }

    #[test]
    fn si_constant_changes_resolution_as_expected() {
        let p = si_params();
        assert!((p.range_resolution() - 2.99792458).abs() < 1e-12);
        assert!((p.velocity_resolution() - 0.24942796359158678).abs() < 1e-15);
    }

    #[test]
    fn steering_range_zero_is_all_ones() {
        let p: RadarParams<f64> = RadarParams::default();
        let s = steering_range(&p, 0.0);
        assert!(s.iter().all(|z| (z - Complex::new(1.0, 0.0)).norm() == 0.0));
    }

    #[test]
    fn steering_range_one_bin_is_dft_column() {
        let p: RadarParams<f64> = RadarParams::default();
        let s = steering_range(&p, p.range_resolution());
        for (n, z) in s.iter().enumerate() {
            let expect = Complex::from_polar(1.0, -std::f64::consts::TAU * n as f64 / 64.0);
            assert!((z - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn steering_range_three_meters_hits_minus_one_midway() {
        // 2 B r / (c N) = 1/64 exactly for r = 3 m under the nominal c.
        let p: RadarParams<f64> = RadarParams::default();
        let s = steering_range(&p, 3.0);
        let inc = s[1].arg();
        assert!((inc + std::f64::consts::TAU / 64.0).abs() < 1e-12);
        assert!((s[32] - Complex::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn steering_doppler_zero_is_all_ones() {
        let p: RadarParams<f64> = RadarParams::default();
        let s = steering_doppler(&p, 0.0);
        assert!(s.iter().all(|z| (z - Complex::new(1.0, 0.0)).norm() == 0.0));
    }

    #[test]
    fn steering_doppler_one_bin_is_dft_column() {
        let p: RadarParams<f64> = RadarParams::default();
        let s = steering_doppler(&p, p.velocity_resolution());
        for (k, z) in s.iter().enumerate() {
            let expect = Complex::from_polar(1.0, -std::f64::consts::TAU * k as f64 / 64.0);
            assert!((z - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn steering_doppler_phase_matches_direct_formula() {
        let p = si_params();
        let s = steering_doppler(&p, 7.5);
        // Per-pulse phase for 7.5 m/s at 9.39 GHz under SI c.
        let expect = -std::f64::consts::TAU * (2.0 * 9.39e9 * 7.5 / SPEED_OF_LIGHT_SI) * 1e-3;
        let wrapped = (expect + std::f64::consts::TAU).rem_euclid(std::f64::consts::TAU);
        let got = (s[1].arg() + std::f64::consts::TAU).rem_euclid(std::f64::consts::TAU);
        assert!((got - wrapped).abs() < 1e-10, "got {got}, expected {wrapped}");
        assert!((expect - -2.951997713418944).abs() < 1e-12);
    }

    #[test]
    fn steering_matrix_shapes_and_column_norms() {
        let p: RadarParams<f64> = RadarParams::default();
        let grid = Grid::default_for(&p).unwrap();
        let (r, v) = steering_matrices(&p, &grid);
        assert_eq!(r.dim(), (64, 32));
        assert_eq!(v.dim(), (64, 63));
        for col in r.columns() {
            let d: f64 = col.iter().map(|z| z.norm_sqr()).sum();
            assert!((d - 64.0).abs() < 1e-9);
        }
    }

    #[test]
    fn grid_rejects_more_bins_than_resolvable() {
        let p: RadarParams<f64> = RadarParams::default();
        assert!(Grid::new(&p, 65, 63).is_err());
        assert!(Grid::new(&p, 32, 65).is_err());
        assert!(Grid::new(&p, 0, 63).is_err());
    }

    #[test]
    fn grid_velocity_bins_are_centered() {
        let p: RadarParams<f64> = RadarParams::default();
        let grid = Grid::default_for(&p).unwrap();
        let v = grid.velocity_bins();
        assert_eq!(v.len(), 63);
        assert!(v[31].abs() < 1e-12);
        assert!((v[62] + v[0]).abs() < 1e-12);
        assert!((v[62] - 31.0 * grid.delta_v()).abs() < 1e-12);
        // Span covers the quoted +-7.73 m/s.
        assert!((v[62] - 7.737619808306709).abs() < 1e-9);
    }

    #[test]
    fn nearest_bin_breaks_ties_toward_lower_index() {
        let p: RadarParams<f64> = RadarParams::default();
        let grid = Grid::default_for(&p).unwrap();
        // Exactly between bins 1 (3 m) and 2 (6 m).
        assert_eq!(grid.nearest_range_bin(4.5).unwrap(), 1);
        assert_eq!(grid.nearest_range_bin(4.500001).unwrap(), 2);
        assert_eq!(grid.nearest_range_bin(0.0).unwrap(), 0);
        assert_eq!(grid.nearest_range_bin(93.0).unwrap(), 31);
        // Half a bin outside either edge is still inside the label area.
        assert_eq!(grid.nearest_range_bin(-1.5).unwrap(), 0);
        assert_eq!(grid.nearest_range_bin(94.5).unwrap(), 31);
        assert!(grid.nearest_range_bin(-1.6).is_err());
        assert!(grid.nearest_range_bin(94.6).is_err());
    }

    #[test]
    fn echo_of_zero_amplitude_is_zero() {
        let p: RadarParams<f64> = RadarParams::default();
        let t = Target {
            range: 10.0,
            velocity: 2.0,
            scnr_db: 0.0,
            phase: 1.0,
            amplitude: 0.0,
        };
        assert!(target_echo(&p, &t).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn echo_at_origin_with_unit_amplitude_is_all_ones() {
        let p: RadarParams<f64> = RadarParams::default();
        let t = Target {
            range: 0.0,
            velocity: 0.0,
            scnr_db: 0.0,
            phase: 0.0,
            amplitude: 1.0,
        };
        let e = target_echo(&p, &t);
        assert!(e.iter().all(|z| (z - Complex::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn echo_energy_and_rank_one_structure() {
        let p: RadarParams<f64> = RadarParams::default();
        let t = Target {
            range: 41.7,
            velocity: -3.3,
            scnr_db: 0.0,
            phase: 0.77,
            amplitude: 2.5,
        };
        let e = target_echo(&p, &t);
        let energy: f64 = e.iter().map(|z| z.norm_sqr()).sum();
        let expect = 2.5 * 2.5 * 64.0 * 64.0;
        assert!((energy - expect).abs() / expect < 1e-9);
        // Any 2x2 minor of a rank-one matrix vanishes.
        for (i, j, k, l) in [(0, 5, 1, 9), (10, 20, 30, 40), (63, 0, 62, 1)] {
            let det = e[(i, k)] * e[(j, l)] - e[(i, l)] * e[(j, k)];
            assert!(det.norm() < 1e-9);
        }
    }

    #[test]
    fn noise_statistics_match_declared_power() {
        let p = RadarParams::<f64> {
            samples_per_chirp: 1000,
            chirps_per_dwell: 1000,
            noise_power: 2.0,
            ..RadarParams::default()
        };
        let mut rng = seeds::stream_rng(123, 0);
        let w = noise_frame(&p, &mut rng);
        let n = w.len() as f64;
        let mean = w.iter().fold(Complex::new(0.0, 0.0), |a, z| a + z) / n;
        // Standard error of the mean of unit-ish variates.
        let se = (2.0 / n).sqrt();
        assert!(mean.norm() < 4.0 * se, "mean {mean} exceeds 4 SE");
        let power: f64 = w.iter().map(|z| z.norm_sqr()).sum::<f64>() / n;
        assert!((power - 2.0).abs() / 2.0 < 0.01);
    }

    #[test]
    fn noise_is_reproducible_under_a_fixed_seed() {
        let p: RadarParams<f64> = RadarParams::default();
        let a = noise_frame(&p, &mut seeds::stream_rng(9, 4));
        let b = noise_frame(&p, &mut seeds::stream_rng(9, 4));
        assert_eq!(a, b);
    }

    #[test]
    fn amplitude_for_scnr_reference_points() {
        let p: RadarParams<f64> = RadarParams::default();
        // Equal energies at 0 dB give unit amplitude.
        let a = amplitude_for_scnr(&p, 0.0, 64.0 * 64.0).unwrap();
        assert!((a - 1.0).abs() < 1e-12);
        assert_eq!(amplitude_for_scnr(&p, f64::NEG_INFINITY, 123.0).unwrap(), 0.0);
        // 15 dB clutter over unit noise: E = N K (1 + 10^1.5).
        let e_int = 64.0 * 64.0 * (1.0 + 10f64.powf(1.5));
        let a0 = amplitude_for_scnr(&p, 0.0, e_int).unwrap();
        assert!((a0 - 5.7116351950806346).abs() < 1e-12);
        assert!(amplitude_for_scnr(&p, 0.0, 0.0).is_err());
        assert!(amplitude_for_scnr(&p, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn compose_reduces_to_noise_without_targets_or_clutter() {
        let p: RadarParams<f64> = RadarParams::default();
        let zeros = Array2::zeros((64, 64));
        let w = noise_frame(&p, &mut seeds::stream_rng(5, 0));
        let x = compose_frame(&p, &[], &zeros, &w).unwrap();
        assert_eq!(x, w);
    }

    #[test]
    fn antiphase_targets_cancel_exactly() {
        let p: RadarParams<f64> = RadarParams::default();
        let base = Target {
            range: 30.0,
            velocity: 4.0,
            scnr_db: 0.0,
            phase: 0.4,
            amplitude: 3.0,
        };
        let flipped = Target {
            phase: 0.4 + std::f64::consts::PI,
            ..base.clone()
        };
        let zeros = Array2::zeros((64, 64));
        let w = noise_frame(&p, &mut seeds::stream_rng(5, 1));
        let x = compose_frame(&p, &[base, flipped], &zeros, &w).unwrap();
        let diff: f64 = (&x - &w).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-9);
    }

    #[test]
    fn composition_is_superposition_of_echoes() {
        let p: RadarParams<f64> = RadarParams::default();
        let mut rng = seeds::stream_rng(77, 0);
        let targets: Vec<Target<f64>> = (0..4)
            .map(|_| Target {
                range: crate::scalar::draw_uniform(&mut rng, 0.0, 93.0),
                velocity: crate::scalar::draw_uniform(&mut rng, -7.5, 7.5),
                scnr_db: 0.0,
                phase: crate::scalar::draw_uniform(&mut rng, 0.0, std::f64::consts::TAU),
                amplitude: crate::scalar::draw_uniform(&mut rng, 0.5, 4.0),
            })
            .collect();
        let zeros: ComplexFrame<f64> = Array2::zeros((64, 64));
        let w = noise_frame(&p, &mut rng);
        let x = compose_frame(&p, &targets, &zeros, &w).unwrap();
        let mut sum = w.clone();
        for t in &targets {
            sum = sum + target_echo(&p, t);
        }
        let err = (&x - &sum)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn compose_rejects_mismatched_shapes() {
        let p: RadarParams<f64> = RadarParams::default();
        let bad: ComplexFrame<f64> = Array2::zeros((8, 8));
        let w: ComplexFrame<f64> = Array2::zeros((64, 64));
        assert!(compose_frame(&p, &[], &bad, &w).is_err());
    }
}
