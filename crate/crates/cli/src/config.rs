//! Config file schemas and loading helpers shared across the verbs.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use clutterlab_core::clutter::RecordedArchive;
use clutterlab_core::dataset::DatasetConfig;
use clutterlab_core::detectors::HybridVariant;
use clutterlab_core::eval::ExperimentConfig;
use clutterlab_core::neural::TrainConfig;
use clutterlab_core::rdmap::DetectionAxis;

use crate::detector::DetectorSpec;
use crate::{validation_error, CliError, CliResult};

/// Parses a TOML config file and returns it together with the directory
/// that relative paths inside it resolve against.
pub fn load_toml<T: DeserializeOwned>(path: &Path) -> CliResult<(T, PathBuf)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("cannot read config {}: {e}", path.display())))?;
    let value = toml::from_str(&text)
        .map_err(|e| CliError::validation(format!("config {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    Ok((value, base))
}

/// Anchors a config-relative path and normalizes it to an absolute one,
/// so the manifest echo works from any directory.
pub fn resolve_path(base: &Path, p: &Path) -> PathBuf {
    let joined = if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    };
    std::path::absolute(&joined).unwrap_or(joined)
}

/// Validation-phase check that the output location exists.
pub fn check_out_dir(out: &Path) -> CliResult<()> {
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if !parent.is_dir() {
        return Err(CliError::validation(format!(
            "output directory {} does not exist",
            parent.display()
        )));
    }
    Ok(())
}

/// Reads a recorded clutter archive; failures are validation errors
/// because the archive is a referenced input.
pub fn load_archive(path: &Path) -> CliResult<RecordedArchive<f64>> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::validation(format!("cannot open archive {}: {e}", path.display())))?;
    RecordedArchive::read(std::io::BufReader::new(file)).map_err(validation_error)
}

/// Detection axis name used by the `--mode` flag and config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Range,
    Doppler,
}

impl Axis {
    pub fn detection_axis(self) -> DetectionAxis {
        match self {
            Axis::Range => DetectionAxis::Range,
            Axis::Doppler => DetectionAxis::Doppler,
        }
    }
}

/// `simulate` config: the dataset description plus an optional recorded
/// clutter archive for datasets that replay measured returns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateFile {
    pub dataset: DatasetConfig<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub archive: Option<PathBuf>,
}

impl Default for SimulateFile {
    fn default() -> Self {
        SimulateFile {
            dataset: DatasetConfig::default(),
            archive: None,
        }
    }
}

/// `train` config: data source, hyperparameters, and network shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainFile {
    pub dataset: DatasetConfig<f64>,
    pub train: TrainConfig,
    /// Detection axis; the `--mode` flag wins when both are given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Axis>,
    /// Standardize each preprocessed column to unit mean square.
    pub standardize: bool,
    /// Output dims (rows, row width) of the alternating stages.
    pub blocks: Vec<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationSplit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub archive: Option<PathBuf>,
}

impl Default for TrainFile {
    fn default() -> Self {
        TrainFile {
            dataset: DatasetConfig::default(),
            train: TrainConfig::default(),
            mode: None,
            standardize: false,
            blocks: vec![[128, 1024], [16, 256], [4, 128]],
            validation: None,
            archive: None,
        }
    }
}

/// Held-out split regenerated from the training distribution under a
/// reserved seed tag no training epoch can reach.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationSplit {
    pub frames_with_targets: u64,
    pub frames_without_targets: u64,
}

/// `calibrate` config: a dataset file, the rate target, and the
/// detector whose threshold is being solved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateFile {
    pub dataset: PathBuf,
    pub target_pfa: f64,
    /// Candidate thresholds tried around the target tail quantile.
    #[serde(default = "default_candidates")]
    pub candidates: usize,
    pub detector: DetectorSpec,
}

fn default_candidates() -> usize {
    24
}

/// `evaluate` config: the experiment plus the detector under test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateFile {
    #[serde(default)]
    pub experiment: ExperimentConfig<f64>,
    pub detector: DetectorSpec,
    /// Threshold record written by `calibrate`; pins the experiment to
    /// that fixed threshold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_file: Option<PathBuf>,
    /// Fusion ablations to run side by side (hybrid detector only); each
    /// writes its own labeled CSV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variants: Option<Vec<HybridVariant>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub archive: Option<PathBuf>,
}

/// Calibrated threshold record passed from `calibrate` to `evaluate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdFile {
    pub threshold: f64,
    pub target_pfa: f64,
    pub achieved_pfa: f64,
    pub achieved: bool,
    pub detector: DetectorSpec,
}
