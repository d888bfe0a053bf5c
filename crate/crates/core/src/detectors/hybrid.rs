//! Fused detector: marginal network scores gating the projection map.
//!
//! The two networks score range-bin and velocity-bin occupancy from the
//! preprocessed dwell; the projection map supplies per-cell evidence.
//! Fusion multiplies the three, zeroes every cell whose marginal scores
//! do not both clear the gate, peak-normalizes the fused map, and
//! thresholds it. Ablation variants replace either the projection map or
//! the marginal scores with all-ones, leaving the rest of the pipeline
//! untouched.

use ndarray::{Array1, Array2};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::DecisionMatrix;
use crate::error::{Error, Result};
use crate::neural::NetworkParams;
use crate::radar::ComplexFrame;
use crate::rdmap::{preprocess, projection_map, DetectionAxis, PreprocessMode};
use crate::scalar::Real;

/// Gate and output thresholds of the fused detector. The gate clips the
/// marginal scores; the output threshold cuts the peak-normalized fused
/// map. Sharing one value reproduces the single-threshold form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridThresholds<T: Real> {
    pub gate: T,
    pub output: T,
}

impl<T: Real> HybridThresholds<T> {
    pub fn shared(t: T) -> Self {
        HybridThresholds { gate: t, output: t }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, t) in [("gate", self.gate), ("output", self.output)] {
            if !(t >= T::zero() && t < T::one()) {
                return Err(Error::invalid(format!(
                    "{name} threshold must lie in [0, 1)"
                )));
            }
        }
        Ok(())
    }
}

/// Which evidence the fused map multiplies together.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HybridVariant {
    /// Projection map times marginal scores times gates.
    #[default]
    Combined,
    /// Marginal scores only: the projection map is replaced by ones.
    MarginalsOnly,
    /// Projection map only: both score vectors are replaced by ones, so
    /// every gate passes.
    ProjectionOnly,
}

impl HybridVariant {
    /// Stable name matching the serialized form, usable in file names.
    pub fn label(self) -> &'static str {
        match self {
            HybridVariant::Combined => "combined",
            HybridVariant::MarginalsOnly => "marginals_only",
            HybridVariant::ProjectionOnly => "projection_only",
        }
    }
}

/// The two marginal networks plus the steering matrices they decide over.
pub struct HybridDetector<'a, T: Real> {
    range_net: &'a NetworkParams<T>,
    doppler_net: &'a NetworkParams<T>,
    range_mode: PreprocessMode,
    doppler_mode: PreprocessMode,
    rmat: &'a Array2<Complex<T>>,
    vmat: &'a Array2<Complex<T>>,
}

impl<'a, T: Real> HybridDetector<'a, T> {
    pub fn new(
        range_net: &'a NetworkParams<T>,
        doppler_net: &'a NetworkParams<T>,
        rmat: &'a Array2<Complex<T>>,
        vmat: &'a Array2<Complex<T>>,
    ) -> Result<Self> {
        if range_net.output_dim() != rmat.ncols() {
            return Err(Error::shape(format!(
                "range network emits {} bins but the steering matrix has {} columns",
                range_net.output_dim(),
                rmat.ncols()
            )));
        }
        if doppler_net.output_dim() != vmat.ncols() {
            return Err(Error::shape(format!(
                "velocity network emits {} bins but the steering matrix has {} columns",
                doppler_net.output_dim(),
                vmat.ncols()
            )));
        }
        Ok(HybridDetector {
            range_net,
            doppler_net,
            range_mode: PreprocessMode::range(),
            doppler_mode: PreprocessMode::doppler(),
            rmat,
            vmat,
        })
    }

    /// Overrides the preprocessing (e.g. standardization) of either
    /// network. The axes must stay matched to the networks' roles.
    pub fn with_modes(
        mut self,
        range_mode: PreprocessMode,
        doppler_mode: PreprocessMode,
    ) -> Result<Self> {
        if range_mode.axis != DetectionAxis::Range || doppler_mode.axis != DetectionAxis::Doppler {
            return Err(Error::invalid(
                "preprocess modes must match the networks' axes",
            ));
        }
        self.range_mode = range_mode;
        self.doppler_mode = doppler_mode;
        Ok(self)
    }

    /// Marginal occupancy scores `(range bins, velocity bins)`.
    pub fn scores(&self, frame: &ComplexFrame<T>) -> Result<(Array1<T>, Array1<T>)> {
        let y_r = self.range_net.forward(&preprocess(frame, self.range_mode))?;
        let y_v = self
            .doppler_net
            .forward(&preprocess(frame, self.doppler_mode))?;
        Ok((y_r, y_v))
    }

    /// The three fusion inputs for a frame under the given variant:
    /// projection map and both marginal score vectors, with the ablated
    /// pieces replaced by ones.
    pub fn evidence(
        &self,
        frame: &ComplexFrame<T>,
        variant: HybridVariant,
    ) -> Result<(Array2<T>, Array1<T>, Array1<T>)> {
        let d_r = self.rmat.ncols();
        let d_v = self.vmat.ncols();
        let (y_r, y_v) = if variant == HybridVariant::ProjectionOnly {
            (Array1::ones(d_r), Array1::ones(d_v))
        } else {
            self.scores(frame)?
        };
        let z = if variant == HybridVariant::MarginalsOnly {
            Array2::ones((d_r, d_v))
        } else {
            projection_map(frame, self.rmat, self.vmat)?
        };
        Ok((z, y_r, y_v))
    }

    /// Gated fused map before normalization: evidence product where both
    /// marginal scores clear the gate, zero elsewhere.
    pub fn fused_map(
        &self,
        frame: &ComplexFrame<T>,
        gate: T,
        variant: HybridVariant,
    ) -> Result<Array2<T>> {
        let (z, y_r, y_v) = self.evidence(frame, variant)?;
        fuse(&z, &y_r, &y_v, gate)
    }

    /// Full fused detection: gate, fuse, peak-normalize, threshold. An
    /// identically zero fused map yields no detections.
    pub fn detect_variant(
        &self,
        frame: &ComplexFrame<T>,
        thresholds: HybridThresholds<T>,
        variant: HybridVariant,
    ) -> Result<DecisionMatrix> {
        thresholds.validate()?;
        let fused = self.fused_map(frame, thresholds.gate, variant)?;
        Ok(threshold_normalized(&fused, thresholds.output))
    }

    pub fn detect(
        &self,
        frame: &ComplexFrame<T>,
        thresholds: HybridThresholds<T>,
    ) -> Result<DecisionMatrix> {
        self.detect_variant(frame, thresholds, HybridVariant::Combined)
    }
}

/// Gated evidence product: `z[m, l] * y_r[m] * y_v[l]` where both scores
/// strictly exceed the gate, zero elsewhere.
pub fn fuse<T: Real>(
    z: &Array2<T>,
    y_r: &Array1<T>,
    y_v: &Array1<T>,
    gate: T,
) -> Result<Array2<T>> {
    let (d_r, d_v) = z.dim();
    if y_r.len() != d_r || y_v.len() != d_v {
        return Err(Error::shape(format!(
            "score vectors of lengths {} and {} do not match a {d_r} x {d_v} map",
            y_r.len(),
            y_v.len()
        )));
    }
    let mut fused = Array2::zeros((d_r, d_v));
    for m in 0..d_r {
        if !(y_r[m] > gate) {
            continue;
        }
        for l in 0..d_v {
            if y_v[l] > gate {
                fused[(m, l)] = z[(m, l)] * y_r[m] * y_v[l];
            }
        }
    }
    Ok(fused)
}

/// Peak-normalizes a non-negative map and marks cells strictly above the
/// threshold. An identically zero (or non-positive) map yields no marks.
pub fn threshold_normalized<T: Real>(map: &Array2<T>, t: T) -> DecisionMatrix {
    let mut peak = T::zero();
    for &v in map.iter() {
        if v > peak {
            peak = v;
        }
    }
    if !(peak > T::zero()) {
        return Array2::zeros(map.dim());
    }
    map.mapv(|v| u8::from(v / peak > t))
}

/// Projection-map detector: peak-normalize `|R^H X V*|` and threshold.
/// Equivalent to the fused detector with both score vectors replaced by
/// ones.
pub fn projection_detect<T: Real>(
    frame: &ComplexFrame<T>,
    rmat: &Array2<Complex<T>>,
    vmat: &Array2<Complex<T>>,
    t: T,
) -> Result<DecisionMatrix> {
    if !(t >= T::zero() && t < T::one()) {
        return Err(Error::invalid("threshold must lie in [0, 1)"));
    }
    let z = projection_map(frame, rmat, vmat)?;
    Ok(threshold_normalized(&z, t))
}
