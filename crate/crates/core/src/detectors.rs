//! Detectors over the range/velocity grid.
//!
//! Classical baselines (cell-averaging and trimmed-mean CFAR on the
//! energy map, an adaptive normalized matched filter with a fixed-point
//! covariance estimate) and the fused detector that gates the projection
//! map with the two marginal networks. All detectors are pure per frame
//! and return the same binary decision matrix shape.

pub mod anmf;
pub mod calibrate;
pub mod cfar;
pub mod hybrid;

pub use anmf::{anmf_detect, anmf_statistic, anmf_statistic_map, fixed_point_covariance, AnmfConfig};
pub use calibrate::{calibrate_threshold, tail_threshold_grid, Calibration};
pub use cfar::{
    ca_cfar, cfar_decide, cfar_score_map, cfar_statistic_map, tm_cfar, CfarConfig, CfarKind,
};
pub use hybrid::{
    fuse, projection_detect, threshold_normalized, HybridDetector, HybridThresholds,
    HybridVariant,
};

/// Binary per-cell decisions, one row per range bin and one column per
/// velocity bin.
pub type DecisionMatrix = ndarray::Array2<u8>;
