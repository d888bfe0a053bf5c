//! Heavy-tailed sea and land clutter models.
//!
//! Each occupied range ring carries a compound-Gaussian slow-time process:
//! a positive texture variable drawn once per ring multiplies a correlated
//! complex-Gaussian speckle vector. With a gamma texture the marginal
//! envelope is K-distributed; small shape values give the long tails that
//! break classical Gaussian-trained detectors.
//!
//! The dwell-level clutter frame stacks dR rings through their fast-time
//! steering vectors, scaled so the expected clutter-to-noise energy ratio
//! over the dwell matches a configured CNR. A recorded-archive path swaps
//! the synthetic rings for crops of real slow-time data while keeping the
//! same frame assembly and scaling.

use std::io::{Read, Write};

use ndarray::{Array1, Array2};
use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{SectionReader, SectionWriter};
use crate::linalg::hermitian_sqrt_factor;
use crate::radar::{ComplexFrame, Grid, RadarParams};
use crate::scalar::{draw_standard_normal, draw_uniform, real, Real};

/// Distribution of the gamma texture shape across dataset records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum ShapeLaw<T: Real> {
    /// Every record uses the same shape.
    Fixed { nu: T },
    /// Each record draws a shape uniformly from `[lo, hi]`.
    Uniform { lo: T, hi: T },
}

impl<T: Real> ShapeLaw<T> {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ShapeLaw::Fixed { nu } => {
                if !(nu > T::zero()) || !nu.is_finite() {
                    return Err(Error::invalid("texture shape must be finite and positive"));
                }
            }
            ShapeLaw::Uniform { lo, hi } => {
                if !(lo > T::zero()) || !lo.is_finite() || !hi.is_finite() || hi < lo {
                    return Err(Error::invalid(
                        "texture shape bounds must be finite, positive and ordered",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Draws the shape for one record. `Fixed` consumes no randomness.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        match *self {
            ShapeLaw::Fixed { nu } => nu,
            ShapeLaw::Uniform { lo, hi } => draw_uniform(
                rng,
                lo.to_f64().expect("finite"),
                hi.to_f64().expect("finite"),
            ),
        }
    }
}

/// Statistical description of the simulated clutter ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClutterSpec<T: Real> {
    /// Clutter-to-noise energy ratio over the dwell, in dB.
    pub cnr_db: T,
    /// Doppler spectral width parameter of the speckle autocorrelation.
    pub sigma_f: T,
    /// Bulk radial velocity of the clutter ridge in m/s.
    pub velocity: T,
    /// Texture shape law.
    pub shape: ShapeLaw<T>,
}

impl<T: Real> Default for ClutterSpec<T> {
    fn default() -> Self {
        ClutterSpec {
            cnr_db: real(15.0),
            sigma_f: real(0.05),
            velocity: real(4.0),
            shape: ShapeLaw::Fixed { nu: real(0.5) },
        }
    }
}

impl<T: Real> ClutterSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if !self.cnr_db.is_finite() {
            return Err(Error::invalid("cnr_db must be finite"));
        }
        if !(self.sigma_f >= T::zero()) || !self.sigma_f.is_finite() {
            return Err(Error::invalid("sigma_f must be finite and non-negative"));
        }
        if !self.velocity.is_finite() {
            return Err(Error::invalid("clutter velocity must be finite"));
        }
        self.shape.validate()
    }
}

/// Slow-time speckle covariance: Gaussian-shaped Doppler spectrum of width
/// `sigma_f` around the ridge velocity. Entry `(p, q)` is
/// `exp(-2 pi^2 sigma_f^2 (p-q)^2) * exp(-j omega (p-q))` with
/// `omega = 2 pi (2 fc v / c) T0`, matching the slow-time steering phase so
/// the ridge lands on the corresponding velocity bin.
pub fn speckle_covariance<T: Real>(
    params: &RadarParams<T>,
    sigma_f: T,
    velocity: T,
) -> Array2<Complex<T>> {
    let k = params.k();
    let tau = real::<T>(std::f64::consts::TAU);
    let omega = tau * (real::<T>(2.0) * params.carrier * velocity / params.propagation_speed)
        * params.pri;
    let two_pi_sq = real::<T>(2.0 * std::f64::consts::PI * std::f64::consts::PI);
    Array2::from_shape_fn((k, k), |(p, q)| {
        let lag = real::<T>(p as f64 - q as f64);
        let mag = (-two_pi_sq * sigma_f * sigma_f * lag * lag).exp();
        Complex::from_polar(mag, -omega * lag)
    })
}

/// Expected clutter energy of one dwell at the given CNR: `N K sigma^2 10^(cnr/10)`.
pub fn expected_clutter_energy<T: Real>(params: &RadarParams<T>, cnr_db: T) -> T {
    params.noise_energy() * real::<T>(10.0).powf(cnr_db / real::<T>(10.0))
}

/// Per-ring amplitude scale delivering the configured CNR when summed over
/// `num_rings` unit-power rings: `sqrt(10^(cnr/10) sigma^2 / dR)`.
pub fn ring_scale<T: Real>(params: &RadarParams<T>, cnr_db: T, num_rings: usize) -> T {
    (real::<T>(10.0).powf(cnr_db / real::<T>(10.0)) * params.noise_power
        / real::<T>(num_rings as f64))
    .sqrt()
}

/// Gamma texture with unit mean and variance `1/nu`.
pub fn sample_texture<T: Real, R: Rng + ?Sized>(nu: T, rng: &mut R) -> T {
    let shape = nu.to_f64().expect("finite shape");
    let gamma = Gamma::new(shape, 1.0 / shape).expect("validated shape");
    real(gamma.sample(rng))
}

/// Square-root factor of a speckle covariance, reused across draws.
#[derive(Debug, Clone)]
pub struct SpeckleFactor<T: Real> {
    factor: Array2<Complex<T>>,
}

impl<T: Real> SpeckleFactor<T> {
    pub fn new(covariance: &Array2<Complex<T>>) -> Result<Self> {
        // Gaussian-shaped covariances are numerically rank-deficient at
        // realistic widths, so the eigenvalue clamp must absorb the
        // rounding noise of the working precision: single precision
        // produces spurious negatives around 1e3 ulps on a 64-pulse dwell.
        let clamp = real::<T>(1e-10).max(real::<T>(1e3) * T::epsilon());
        Ok(SpeckleFactor {
            factor: hermitian_sqrt_factor(covariance, clamp)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    /// One correlated speckle vector `z ~ CN(0, M)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Array1<Complex<T>> {
        let k = self.dim();
        let half = real::<T>(0.5).sqrt();
        let mut white = Vec::with_capacity(k);
        for _ in 0..k {
            white.push(Complex::new(
                half * draw_standard_normal::<T, _>(rng),
                half * draw_standard_normal::<T, _>(rng),
            ));
        }
        self.factor.dot(&Array1::from_vec(white))
    }
}

/// One compound-Gaussian ring: texture square root times a speckle draw.
/// Consumes the texture first, then the 2K speckle normals.
pub fn sample_ring<T: Real, R: Rng + ?Sized>(
    factor: &SpeckleFactor<T>,
    nu: T,
    rng: &mut R,
) -> Array1<Complex<T>> {
    let s = sample_texture(nu, rng).sqrt();
    factor.sample(rng).mapv_into(|z| z * s)
}

/// Synthetic clutter generator for a fixed waveform and grid.
#[derive(Debug, Clone)]
pub struct SimulatedClutter<T: Real> {
    steering: Array2<Complex<T>>,
    factor: SpeckleFactor<T>,
    scale: T,
    shape: ShapeLaw<T>,
    cnr_db: T,
}

impl<T: Real> SimulatedClutter<T> {
    pub fn new(params: &RadarParams<T>, grid: &Grid<T>, spec: &ClutterSpec<T>) -> Result<Self> {
        spec.validate()?;
        let cov = speckle_covariance(params, spec.sigma_f, spec.velocity);
        let factor = SpeckleFactor::new(&cov)?;
        let (steering, _) = crate::radar::steering_matrices(params, grid);
        Ok(SimulatedClutter {
            steering,
            factor,
            scale: ring_scale(params, spec.cnr_db, grid.num_range_bins()),
            shape: spec.shape,
            cnr_db: spec.cnr_db,
        })
    }

    pub fn cnr_db(&self) -> T {
        self.cnr_db
    }

    /// Draws one dwell of clutter. The record shape is drawn first, then
    /// each ring in ascending range order.
    pub fn sample_frame<R: Rng + ?Sized>(&self, rng: &mut R) -> ComplexFrame<T> {
        let nu = self.shape.sample(rng);
        self.sample_frame_with_shape(nu, rng)
    }

    /// Same draw with the texture shape pinned externally.
    pub fn sample_frame_with_shape<R: Rng + ?Sized>(
        &self,
        nu: T,
        rng: &mut R,
    ) -> ComplexFrame<T> {
        let (n, d_r) = self.steering.dim();
        let k = self.factor.dim();
        let mut frame = Array2::zeros((n, k));
        for m in 0..d_r {
            let ring = sample_ring(&self.factor, nu, rng);
            let col = self.steering.column(m);
            for (i, rn) in col.iter().enumerate() {
                let gain = *rn * self.scale;
                for (j, c) in ring.iter().enumerate() {
                    frame[(i, j)] += gain * *c;
                }
            }
        }
        frame
    }
}

/// Linear polarization channel of a recorded archive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Polarization {
    Hh,
    Hv,
    Vh,
    Vv,
}

impl Polarization {
    fn code(self) -> u8 {
        match self {
            Polarization::Hh => 0,
            Polarization::Hv => 1,
            Polarization::Vh => 2,
            Polarization::Vv => 3,
        }
    }

    fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Polarization::Hh),
            1 => Some(Polarization::Hv),
            2 => Some(Polarization::Vh),
            3 => Some(Polarization::Vv),
            _ => None,
        }
    }
}

const ARCHIVE_MAGIC: &[u8; 4] = b"RDCA";
const ARCHIVE_VERSION: u16 = 1;

/// Recorded slow-time clutter data: `num_range_bins` rows of
/// `num_pulses` complex samples each.
#[derive(Debug, Clone)]
pub struct RecordedArchive<T: Real> {
    data: Array2<Complex<T>>,
    range_resolution: f64,
    polarization: Polarization,
}

impl<T: Real> RecordedArchive<T> {
    /// Wraps raw recordings. Fails on empty or all-zero data.
    pub fn new(
        data: Array2<Complex<T>>,
        range_resolution: f64,
        polarization: Polarization,
    ) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::invalid("archive must contain at least one sample"));
        }
        if !(range_resolution > 0.0) || !range_resolution.is_finite() {
            return Err(Error::invalid("archive range resolution must be positive"));
        }
        let power: T = data.iter().map(|z| z.norm_sqr()).sum();
        if !(power > T::zero()) {
            return Err(Error::invalid("archive has zero total power"));
        }
        Ok(RecordedArchive {
            data,
            range_resolution,
            polarization,
        })
    }

    pub fn num_range_bins(&self) -> usize {
        self.data.nrows()
    }

    pub fn num_pulses(&self) -> usize {
        self.data.ncols()
    }

    pub fn range_resolution(&self) -> f64 {
        self.range_resolution
    }

    pub fn polarization(&self) -> Polarization {
        self.polarization
    }

    pub fn data(&self) -> &Array2<Complex<T>> {
        &self.data
    }

    /// Mean per-sample power over the whole archive.
    pub fn mean_power(&self) -> T {
        let total: T = self.data.iter().map(|z| z.norm_sqr()).sum();
        total / real::<T>(self.data.len() as f64)
    }

    /// Rescales the archive in place to unit mean per-sample power, so the
    /// rows can stand in for unit-power synthetic rings.
    pub fn normalize(&mut self) {
        let inv = self.mean_power().sqrt().recip();
        self.data.mapv_inplace(|z| z * inv);
    }

    pub fn write<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = SectionWriter::new(writer);
        w.write_magic(ARCHIVE_MAGIC)?;
        w.write_u16(ARCHIVE_VERSION)?;
        w.write_u32(self.num_range_bins() as u32)?;
        w.write_u32(self.num_pulses() as u32)?;
        w.write_f64(self.range_resolution)?;
        w.write_u8(self.polarization.code())?;
        // Samples run range-bin major: all bins of pulse 0, then pulse 1.
        for q in 0..self.num_pulses() {
            for p in 0..self.num_range_bins() {
                let z = self.data[(p, q)];
                w.write_f32(z.re.to_f64().expect("finite") as f32)?;
                w.write_f32(z.im.to_f64().expect("finite") as f32)?;
            }
        }
        w.flush()
    }

    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut r = SectionReader::new(reader);
        r.enter("archive header");
        r.expect_magic(ARCHIVE_MAGIC)?;
        let version = r.read_u16()?;
        if version != ARCHIVE_VERSION {
            return Err(r.format_error(format!("unsupported archive version {version}")));
        }
        let p = r.read_u32()? as usize;
        let q = r.read_u32()? as usize;
        let resolution = r.read_f64()?;
        let code = r.read_u8()?;
        let polarization = Polarization::from_code(code)
            .ok_or_else(|| r.format_error(format!("unknown polarization code {code}")))?;
        if p == 0 || q == 0 {
            return Err(r.format_error("empty archive dimensions"));
        }
        r.enter("archive samples");
        let raw = r.read_f32_vec(2 * p * q)?;
        let mut data = Array2::zeros((p, q));
        for (idx, chunk) in raw.chunks_exact(2).enumerate() {
            let (pi, qi) = (idx % p, idx / p);
            data[(pi, qi)] = Complex::new(real::<T>(chunk[0] as f64), real::<T>(chunk[1] as f64));
        }
        RecordedArchive::new(data, resolution, polarization)
    }
}

/// Clutter frame source used by dataset generation.
#[derive(Debug, Clone)]
pub enum ClutterSource<T: Real> {
    /// Thermal noise only.
    None,
    /// Compound-Gaussian synthesis.
    Simulated(SimulatedClutter<T>),
    /// Random crops from a recorded archive, scaled to the configured CNR.
    Recorded {
        archive: RecordedArchive<T>,
        steering: Array2<Complex<T>>,
        scale: T,
        pulses: usize,
    },
}

impl<T: Real> ClutterSource<T> {
    pub fn recorded(
        params: &RadarParams<T>,
        grid: &Grid<T>,
        mut archive: RecordedArchive<T>,
        cnr_db: T,
    ) -> Result<Self> {
        if archive.num_range_bins() < grid.num_range_bins() {
            return Err(Error::invalid(format!(
                "archive spans {} range bins, grid needs {}",
                archive.num_range_bins(),
                grid.num_range_bins()
            )));
        }
        if archive.num_pulses() < params.k() {
            return Err(Error::invalid(format!(
                "archive holds {} pulses, dwell needs {}",
                archive.num_pulses(),
                params.k()
            )));
        }
        archive.normalize();
        let (steering, _) = crate::radar::steering_matrices(params, grid);
        Ok(ClutterSource::Recorded {
            archive,
            steering,
            scale: ring_scale(params, cnr_db, grid.num_range_bins()),
            pulses: params.k(),
        })
    }

    /// Draws the clutter component of one dwell.
    pub fn sample_frame<R: Rng + ?Sized>(
        &self,
        params: &RadarParams<T>,
        rng: &mut R,
    ) -> ComplexFrame<T> {
        match self {
            ClutterSource::None => Array2::zeros((params.n(), params.k())),
            ClutterSource::Simulated(sim) => sim.sample_frame(rng),
            ClutterSource::Recorded {
                archive,
                steering,
                scale,
                pulses,
            } => {
                let (n, d_r) = steering.dim();
                let p0 = rng.gen_range(0..=archive.num_range_bins() - d_r);
                let q0 = rng.gen_range(0..=archive.num_pulses() - *pulses);
                let mut frame = Array2::zeros((n, *pulses));
                for m in 0..d_r {
                    let col = steering.column(m);
                    for (i, rn) in col.iter().enumerate() {
                        let gain = *rn * *scale;
                        for j in 0..*pulses {
                            frame[(i, j)] += gain * archive.data()[(p0 + m, q0 + j)];
                        }
                    }
                }
                frame
            }
        }
    }

    /// Total interference energy paired with a drawn clutter frame, used by
    /// the SCNR amplitude law. Synthetic sources use the ensemble
    /// expectation; recorded crops use the energy actually drawn.
    pub fn interference_energy(
        &self,
        params: &RadarParams<T>,
        clutter: &ComplexFrame<T>,
    ) -> T {
        match self {
            ClutterSource::None => params.noise_energy(),
            ClutterSource::Simulated(sim) => {
                params.noise_energy() + expected_clutter_energy(params, sim.cnr_db())
            }
            ClutterSource::Recorded { .. } => {
                params.noise_energy() + clutter.iter().map(|z| z.norm_sqr()).sum()
            }
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, ClutterSource::None)
    }
}
