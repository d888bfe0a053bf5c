//! Detector registry: config-file specs and the engines built from them.

use std::path::{Path, PathBuf};

use ndarray::Array2;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use clutterlab_core::dataset::FrameRecord;
use clutterlab_core::detectors::{
    anmf_statistic_map, cfar_score_map, cfar_statistic_map, AnmfConfig, CfarConfig, CfarKind,
    HybridDetector, HybridVariant,
};
use clutterlab_core::eval::Prepared;
use clutterlab_core::neural::{load_checkpoint, NetworkParams};
use clutterlab_core::radar::{steering_matrices, Grid, RadarParams};
use clutterlab_core::rdmap::{energy_map, projection_map, DetectionAxis, PreprocessMode};
use clutterlab_core::Result;

use crate::config::resolve_path;
use crate::{validation_error, CliError, CliResult};

/// Detector selection in `calibrate` and `evaluate` files. The threshold
/// domain depends on the kind: CFAR thresholds multiply the local
/// statistic, all the others cut scores in [0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DetectorSpec {
    /// Cell-averaging CFAR on the energy map.
    CaCfar {
        #[serde(default)]
        cfar: CfarConfig<f64>,
    },
    /// Trimmed-mean CFAR on the energy map.
    TmCfar {
        #[serde(default)]
        cfar: CfarConfig<f64>,
    },
    /// Normalized adaptive matched filter with range-ring secondary data.
    Anmf {
        #[serde(default)]
        anmf: AnmfConfig<f64>,
    },
    /// Peak-normalized projection map thresholding.
    Projection,
    /// Gated fusion of two marginal networks with the projection map.
    Hybrid {
        range_checkpoint: PathBuf,
        doppler_checkpoint: PathBuf,
        #[serde(default)]
        variant: HybridVariant,
    },
}

impl DetectorSpec {
    /// Anchors checkpoint paths to the config file's directory.
    pub fn resolve_paths(&mut self, base: &Path) {
        if let DetectorSpec::Hybrid {
            range_checkpoint,
            doppler_checkpoint,
            ..
        } = self
        {
            *range_checkpoint = resolve_path(base, range_checkpoint);
            *doppler_checkpoint = resolve_path(base, doppler_checkpoint);
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            DetectorSpec::CaCfar { .. } => "ca_cfar",
            DetectorSpec::TmCfar { .. } => "tm_cfar",
            DetectorSpec::Anmf { .. } => "anmf",
            DetectorSpec::Projection => "projection",
            DetectorSpec::Hybrid { .. } => "hybrid",
        }
    }

    pub fn is_hybrid(&self) -> bool {
        matches!(self, DetectorSpec::Hybrid { .. })
    }
}

/// A detector bound to one radar profile and grid, able to turn records
/// into score representations whose thresholding reproduces the live
/// detector's decisions.
#[derive(Clone)]
pub struct DetectorEngine {
    params: RadarParams<f64>,
    grid: Grid<f64>,
    rmat: Array2<Complex<f64>>,
    vmat: Array2<Complex<f64>>,
    kind: EngineKind,
}

#[derive(Clone)]
enum EngineKind {
    Cfar {
        cfg: CfarConfig<f64>,
        flavor: CfarKind,
    },
    Anmf {
        cfg: AnmfConfig<f64>,
    },
    Projection,
    Hybrid {
        range: LoadedNet,
        doppler: LoadedNet,
        variant: HybridVariant,
    },
}

#[derive(Clone)]
struct LoadedNet {
    net: NetworkParams<f64>,
    mode: PreprocessMode,
}

impl DetectorEngine {
    /// Loads and cross-checks everything the spec references; failures
    /// here are validation errors because no output exists yet.
    pub fn build(
        spec: &DetectorSpec,
        params: &RadarParams<f64>,
        grid: &Grid<f64>,
    ) -> CliResult<Self> {
        let (rmat, vmat) = steering_matrices(params, grid);
        let kind = match spec {
            DetectorSpec::CaCfar { cfar } => probe_cfar(cfar, CfarKind::CellAveraging, grid)?,
            DetectorSpec::TmCfar { cfar } => probe_cfar(cfar, CfarKind::TrimmedMean, grid)?,
            DetectorSpec::Anmf { anmf } => {
                anmf.validate().map_err(validation_error)?;
                let d_r = grid.num_range_bins();
                if d_r < 2 + 2 * anmf.guard_range_cells {
                    return Err(CliError::validation(format!(
                        "detector.anmf: {d_r} range bins leave no secondary data outside the guard interval"
                    )));
                }
                EngineKind::Anmf { cfg: *anmf }
            }
            DetectorSpec::Projection => EngineKind::Projection,
            DetectorSpec::Hybrid {
                range_checkpoint,
                doppler_checkpoint,
                variant,
            } => {
                let range = load_net(
                    range_checkpoint,
                    DetectionAxis::Range,
                    grid.num_range_bins(),
                    (params.k(), 2 * params.n()),
                )?;
                let doppler = load_net(
                    doppler_checkpoint,
                    DetectionAxis::Doppler,
                    grid.num_velocity_bins(),
                    (params.n(), 2 * params.k()),
                )?;
                EngineKind::Hybrid {
                    range,
                    doppler,
                    variant: *variant,
                }
            }
        };
        Ok(DetectorEngine {
            params: params.clone(),
            grid: grid.clone(),
            rmat,
            vmat,
            kind,
        })
    }

    /// Swaps the fusion ablation; only the hybrid detector has one.
    pub fn with_variant(mut self, variant: HybridVariant) -> CliResult<Self> {
        match &mut self.kind {
            EngineKind::Hybrid { variant: v, .. } => {
                *v = variant;
                Ok(self)
            }
            _ => Err(CliError::validation(
                "variants only apply to the hybrid detector",
            )),
        }
    }

    /// Score representation of one record.
    pub fn prepare(&self, record: &FrameRecord<f64>) -> Result<Prepared<f64>> {
        match &self.kind {
            EngineKind::Cfar { cfg, flavor } => {
                let map = energy_map(&record.frame, &self.rmat, &self.vmat)?;
                Ok(Prepared::score_map(cfar_score_map(&map, cfg, *flavor)?))
            }
            EngineKind::Anmf { cfg } => Ok(Prepared::score_map(anmf_statistic_map(
                &record.frame,
                &self.params,
                &self.grid,
                cfg,
            )?)),
            EngineKind::Projection => Ok(Prepared::normalized_score_map(projection_map(
                &record.frame,
                &self.rmat,
                &self.vmat,
            )?)),
            EngineKind::Hybrid {
                range,
                doppler,
                variant,
            } => {
                let det = HybridDetector::new(&range.net, &doppler.net, &self.rmat, &self.vmat)?
                    .with_modes(range.mode, doppler.mode)?;
                Prepared::fusion(&det, &record.frame, *variant)
            }
        }
    }
}

/// One statistic pass over a zero map surfaces window and trim errors,
/// including the wrap-width constraint against this grid, before any
/// output exists.
fn probe_cfar(cfg: &CfarConfig<f64>, flavor: CfarKind, grid: &Grid<f64>) -> CliResult<EngineKind> {
    let zeros = Array2::zeros((grid.num_range_bins(), grid.num_velocity_bins()));
    cfar_statistic_map(&zeros, cfg, flavor).map_err(validation_error)?;
    Ok(EngineKind::Cfar { cfg: *cfg, flavor })
}

fn load_net(
    path: &Path,
    axis: DetectionAxis,
    output_dim: usize,
    input: (usize, usize),
) -> CliResult<LoadedNet> {
    let ckpt = load_checkpoint(path)
        .map_err(|e| CliError::validation(format!("checkpoint {}: {e}", path.display())))?;
    if ckpt.mode.axis != axis {
        return Err(CliError::validation(format!(
            "checkpoint {} holds a {} network, expected {}",
            path.display(),
            ckpt.mode.axis.label(),
            axis.label(),
        )));
    }
    if ckpt.network.output_dim() != output_dim {
        return Err(CliError::validation(format!(
            "checkpoint {} emits {} bins but the grid has {output_dim}",
            path.display(),
            ckpt.network.output_dim(),
        )));
    }
    if ckpt.network.arch().input != input {
        return Err(CliError::validation(format!(
            "checkpoint {} expects {:?} input but this dwell preprocesses to {:?}",
            path.display(),
            ckpt.network.arch().input,
            input,
        )));
    }
    Ok(LoadedNet {
        net: ckpt.network,
        mode: ckpt.mode,
    })
}
