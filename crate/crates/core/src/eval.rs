//! Detection metrics, ROC sweeps, and the replicate experiment harness.
//!
//! Hits are counted per target through a 3 x 3 neighbor box around its
//! grid bin; false alarms are counted per cell over the quiet region
//! left after removing every box. The experiment harness sweeps one
//! axis (signal level, false-alarm target, texture shape, or target
//! count), calibrates thresholds on a dedicated split, averages over
//! replicates, and emits plot-ready CSV rows.

pub mod experiment;
pub mod metrics;
pub mod roc;

pub use experiment::{
    run_experiment, run_experiment_with_source, write_report_csv, CalibrationSet,
    ExperimentConfig, Prepared, SweepAxis, SweepRow, ThresholdSource,
};
pub use metrics::{
    compute_pd, compute_pfa, dataset_counts, frame_counts, neighbor_box, target_bins,
    DetectionCounts, MetricReport,
};
pub use roc::{decisions_at, roc_sweep, RocRow};
