//! Sweep/replicate experiment orchestration.
//!
//! One experiment sweeps a single axis. At each sweep point the harness
//! resolves a threshold (fixed, or calibrated on a dedicated split drawn
//! from the base dataset distribution), evaluates `replicates`
//! independently seeded datasets, and aggregates detection and
//! false-alarm rates into one row. Seeds derive from the experiment
//! seed: the calibration split uses tag 0, and replicate `r` of sweep
//! point `i` uses `derive(derive(seed, 1 + i), r)`, so any detector
//! evaluated under the same experiment seed sees identical data.

use std::io::{self, Write};

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{frame_counts, target_bins, DetectionCounts};
use super::roc::decisions_at;
use crate::dataset::{ClutterConfig, CountLaw, DatasetConfig, DatasetGenerator, FrameRecord, ScnrLaw};
use crate::clutter::ShapeLaw;
use crate::detectors::hybrid::{fuse, threshold_normalized};
use crate::detectors::{
    calibrate_threshold, tail_threshold_grid, DecisionMatrix, HybridDetector, HybridVariant,
};
use crate::error::{Error, Result};
use crate::radar::ComplexFrame;
use crate::scalar::Real;
use crate::seeds;

/// Per-frame detector state that can be rethresholded cheaply, so
/// calibration and sweeps run the expensive part (networks, covariance
/// estimates, projections) once per frame.
#[derive(Debug, Clone)]
pub enum Prepared<T: Real> {
    /// Raw score map; a cell fires when its score strictly exceeds the
    /// threshold.
    ScoreMap(Array2<T>),
    /// Fusion inputs for the gated detector; the shared threshold acts
    /// as both gate and output cut, exactly as the live detector.
    GatedFusion {
        z: Array2<T>,
        y_r: Array1<T>,
        y_v: Array1<T>,
    },
}

impl<T: Real> Prepared<T> {
    pub fn score_map(map: Array2<T>) -> Self {
        Prepared::ScoreMap(map)
    }

    /// Peak-normalizes the map first (an all-zero map stays zero), for
    /// detectors whose threshold is relative to the frame peak.
    pub fn normalized_score_map(map: Array2<T>) -> Self {
        let peak = map.iter().copied().fold(T::zero(), |a, b| a.max(b));
        if peak > T::zero() {
            Prepared::ScoreMap(map.mapv(|v| v / peak))
        } else {
            Prepared::ScoreMap(map)
        }
    }

    /// Captures the fusion inputs of the gated detector (with the chosen
    /// ablation variant) for one frame.
    pub fn fusion(
        detector: &HybridDetector<'_, T>,
        frame: &ComplexFrame<T>,
        variant: HybridVariant,
    ) -> Result<Self> {
        let (z, y_r, y_v) = detector.evidence(frame, variant)?;
        Ok(Prepared::GatedFusion { z, y_r, y_v })
    }

    /// Decisions at one threshold.
    pub fn decide(&self, threshold: T) -> Result<DecisionMatrix> {
        match self {
            Prepared::ScoreMap(scores) => Ok(decisions_at(scores, threshold)),
            Prepared::GatedFusion { z, y_r, y_v } => {
                let fused = fuse(z, y_r, y_v, threshold)?;
                Ok(threshold_normalized(&fused, threshold))
            }
        }
    }

    /// Pushes this frame's candidate threshold values into a pool used
    /// to build a calibration grid. Score maps contribute their finite
    /// cells; fusion frames contribute their peak-normalized open-gate
    /// values below one.
    pub fn pool_into(&self, out: &mut Vec<T>) {
        match self {
            Prepared::ScoreMap(scores) => {
                out.extend(scores.iter().copied().filter(|v| v.is_finite()));
            }
            Prepared::GatedFusion { z, y_r, y_v } => {
                let Ok(fused) = fuse(z, y_r, y_v, T::zero()) else {
                    return;
                };
                let peak = fused.iter().copied().fold(T::zero(), |a, b| a.max(b));
                if peak > T::zero() {
                    out.extend(
                        fused
                            .iter()
                            .map(|&v| v / peak)
                            .filter(|v| v.is_finite() && *v < T::one()),
                    );
                }
            }
        }
    }
}

/// The axis an experiment varies. Every other dataset property comes
/// from the base config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis<T: Real> {
    /// Fixed per-target signal level in dB at each point.
    Scnr { db: Vec<T> },
    /// Desired false-alarm rate at each point; requires a calibrated
    /// threshold source.
    TargetPfa { targets: Vec<f64> },
    /// Fixed clutter texture shape at each point; requires simulated
    /// clutter.
    TextureShape { nu: Vec<T> },
    /// Fixed target count per frame at each point.
    TargetCount { counts: Vec<u32> },
}

impl<T: Real> SweepAxis<T> {
    pub fn len(&self) -> usize {
        match self {
            SweepAxis::Scnr { db } => db.len(),
            SweepAxis::TargetPfa { targets } => targets.len(),
            SweepAxis::TextureShape { nu } => nu.len(),
            SweepAxis::TargetCount { counts } => counts.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Numeric echo of sweep point `i` for reports.
    pub fn value(&self, i: usize) -> f64 {
        match self {
            SweepAxis::Scnr { db } => db[i].to_f64().unwrap_or(f64::NAN),
            SweepAxis::TargetPfa { targets } => targets[i],
            SweepAxis::TextureShape { nu } => nu[i].to_f64().unwrap_or(f64::NAN),
            SweepAxis::TargetCount { counts } => counts[i] as f64,
        }
    }

    /// The evaluation dataset config at sweep point `i`.
    pub fn apply(&self, i: usize, base: &DatasetConfig<T>) -> Result<DatasetConfig<T>> {
        let mut cfg = base.clone();
        match self {
            SweepAxis::Scnr { db } => cfg.scnr = ScnrLaw::Fixed { db: db[i] },
            SweepAxis::TargetPfa { .. } => {}
            SweepAxis::TextureShape { nu } => match &mut cfg.clutter {
                ClutterConfig::Simulated(spec) => {
                    spec.shape = ShapeLaw::Fixed { nu: nu[i] };
                }
                _ => {
                    return Err(Error::invalid(
                        "texture shape sweeps require simulated clutter",
                    ))
                }
            },
            SweepAxis::TargetCount { counts } => {
                cfg.target_count = CountLaw::Fixed { count: counts[i] };
            }
        }
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::invalid("sweep grid is empty"));
        }
        match self {
            SweepAxis::Scnr { db } => {
                if db.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("sweep signal levels must be finite"));
                }
            }
            SweepAxis::TargetPfa { targets } => {
                if targets.iter().any(|p| !(*p > 0.0 && *p <= 1.0)) {
                    return Err(Error::invalid(
                        "sweep false-alarm targets must lie in (0, 1]",
                    ));
                }
            }
            SweepAxis::TextureShape { nu } => {
                if nu.iter().any(|v| !(*v > T::zero()) || !v.is_finite()) {
                    return Err(Error::invalid("sweep texture shapes must be positive"));
                }
            }
            SweepAxis::TargetCount { .. } => {}
        }
        Ok(())
    }
}

/// Where each sweep point's threshold comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdSource<T: Real> {
    Fixed { threshold: T },
    /// Calibrate on the dedicated split to this false-alarm target (a
    /// false-alarm sweep overrides the target per point).
    Calibrated { target_pfa: f64 },
}

/// Full description of one experiment.
///
/// `dataset` doubles as the per-replicate evaluation template (its frame
/// counts are per replicate) and as the distribution of the calibration
/// split, which swaps in the calibration frame counts and its own seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig<T: Real> {
    pub dataset: DatasetConfig<T>,
    pub sweep: SweepAxis<T>,
    pub threshold: ThresholdSource<T>,
    pub replicates: u32,
    pub calibration_frames_with_targets: u64,
    pub calibration_frames_without_targets: u64,
    /// Number of candidate thresholds tried during calibration.
    pub candidate_thresholds: usize,
    pub seed: u64,
}

impl<T: Real> Default for ExperimentConfig<T> {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetConfig::default(),
            sweep: SweepAxis::Scnr {
                db: vec![T::zero()],
            },
            threshold: ThresholdSource::Calibrated { target_pfa: 1e-3 },
            replicates: 30,
            calibration_frames_with_targets: 4000,
            calibration_frames_without_targets: 2000,
            candidate_thresholds: 24,
            seed: 0,
        }
    }
}

impl<T: Real> ExperimentConfig<T> {
    /// Shrinks the replicate count to the quick five-replicate profile.
    pub fn desk_scale(mut self) -> Self {
        self.replicates = 5;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.dataset.validate()?;
        if self.dataset.total_records() == 0 {
            return Err(Error::invalid("evaluation dataset holds no frames"));
        }
        self.sweep.validate()?;
        if let SweepAxis::TextureShape { .. } = self.sweep {
            if !matches!(self.dataset.clutter, ClutterConfig::Simulated(_)) {
                return Err(Error::invalid(
                    "texture shape sweeps require simulated clutter",
                ));
            }
        }
        if self.replicates == 0 {
            return Err(Error::invalid("at least one replicate is required"));
        }
        match self.threshold {
            ThresholdSource::Fixed { threshold } => {
                if !threshold.is_finite() {
                    return Err(Error::invalid("fixed threshold must be finite"));
                }
                if matches!(self.sweep, SweepAxis::TargetPfa { .. }) {
                    return Err(Error::invalid(
                        "a false-alarm sweep needs a calibrated threshold source",
                    ));
                }
            }
            ThresholdSource::Calibrated { target_pfa } => {
                if !(target_pfa > 0.0 && target_pfa <= 1.0) {
                    return Err(Error::invalid(
                        "calibration target must lie in (0, 1]",
                    ));
                }
                if self.candidate_thresholds == 0 {
                    return Err(Error::invalid("candidate threshold count must be positive"));
                }
                if self.calibration_frames_with_targets + self.calibration_frames_without_targets
                    == 0
                {
                    return Err(Error::invalid("calibration split holds no frames"));
                }
            }
        }
        Ok(())
    }
}

/// One aggregated sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow<T: Real> {
    pub sweep_value: f64,
    pub threshold: T,
    /// False when calibration could not reach its target and fell back
    /// to the largest candidate.
    pub achieved: bool,
    pub pd_mean: f64,
    pub pd_std: f64,
    pub pfa_mean: f64,
    pub pfa_std: f64,
    pub n_targets: u64,
    pub n_cells: u64,
}

/// Mean and sample standard deviation, summed in sorted order so the
/// result is bit-identical for any input order. Empty input yields NaN;
/// a single value has zero deviation.
pub fn mean_std(mut values: Vec<f64>) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    values.sort_unstable_by(|a, b| a.partial_cmp(b).expect("rates are never NaN"));
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn aggregate_row<T: Real>(
    sweep_value: f64,
    threshold: T,
    achieved: bool,
    replicates: &[DetectionCounts],
) -> SweepRow<T> {
    let (pd_mean, pd_std) = mean_std(replicates.iter().filter_map(DetectionCounts::pd).collect());
    let (pfa_mean, pfa_std) =
        mean_std(replicates.iter().filter_map(DetectionCounts::pfa).collect());
    SweepRow {
        sweep_value,
        threshold,
        achieved,
        pd_mean,
        pd_std,
        pfa_mean,
        pfa_std,
        n_targets: replicates.iter().map(|c| c.targets).sum(),
        n_cells: replicates.iter().map(|c| c.no_target_cells).sum(),
    }
}

/// Prepared frames paired with their protected bins, ready to measure
/// false alarm rates at candidate thresholds.
pub struct CalibrationSet<T: Real> {
    prepared: Vec<(Prepared<T>, Vec<(usize, usize)>)>,
}

impl<T: Real> CalibrationSet<T> {
    pub fn new(prepared: Vec<(Prepared<T>, Vec<(usize, usize)>)>) -> Self {
        CalibrationSet { prepared }
    }

    /// False alarm rate over the quiet cells at one threshold.
    pub fn pfa_at(&self, threshold: T) -> Result<f64> {
        let mut counts = DetectionCounts::default();
        for (prepared, bins) in &self.prepared {
            counts.merge(frame_counts(&prepared.decide(threshold)?, bins)?);
        }
        counts
            .pfa()
            .ok_or_else(|| Error::invalid("calibration split has no quiet cells"))
    }

    /// Candidate grid from the pooled scores, then the smallest threshold
    /// whose measured rate meets the target.
    pub fn calibrate(
        &self,
        target_pfa: f64,
        candidates: usize,
    ) -> Result<crate::detectors::Calibration<T>> {
        let mut pool = Vec::new();
        for (prepared, _) in &self.prepared {
            prepared.pool_into(&mut pool);
        }
        let grid = tail_threshold_grid(&pool, target_pfa, candidates)?;
        calibrate_threshold(&grid, target_pfa, |t| self.pfa_at(t))
    }
}

fn prepare_calibration<T, S, P>(
    cfg: &ExperimentConfig<T>,
    source: &S,
    prepare: &P,
) -> Result<CalibrationSet<T>>
where
    T: Real,
    S: Fn(DatasetConfig<T>) -> Result<DatasetGenerator<T>> + Sync,
    P: Fn(&FrameRecord<T>) -> Result<Prepared<T>> + Sync,
{
    let mut cal_cfg = cfg.dataset.clone();
    cal_cfg.frames_with_targets = cfg.calibration_frames_with_targets;
    cal_cfg.frames_without_targets = cfg.calibration_frames_without_targets;
    cal_cfg.seed = seeds::derive(cfg.seed, 0);
    let generator = source(cal_cfg)?;
    let prepared = (0..generator.total_records())
        .into_par_iter()
        .map(|idx| {
            let record = generator.record(idx)?;
            let bins = target_bins(generator.grid(), &record.targets)?;
            Ok((prepare(&record)?, bins))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CalibrationSet { prepared })
}

/// Runs the experiment with a custom dataset source (needed when the
/// clutter comes from a recorded archive). `on_row` sees each finished
/// sweep point in order, so callers can stream partial results even if a
/// later point fails.
pub fn run_experiment_with_source<T, S, P>(
    cfg: &ExperimentConfig<T>,
    source: S,
    prepare: P,
    mut on_row: impl FnMut(&SweepRow<T>),
) -> Result<Vec<SweepRow<T>>>
where
    T: Real,
    S: Fn(DatasetConfig<T>) -> Result<DatasetGenerator<T>> + Sync,
    P: Fn(&FrameRecord<T>) -> Result<Prepared<T>> + Sync,
{
    cfg.validate()?;
    let calibration = match cfg.threshold {
        ThresholdSource::Calibrated { .. } => Some(prepare_calibration(cfg, &source, &prepare)?),
        ThresholdSource::Fixed { .. } => None,
    };
    let mut rows = Vec::with_capacity(cfg.sweep.len());
    for i in 0..cfg.sweep.len() {
        let point_cfg = cfg.sweep.apply(i, &cfg.dataset)?;
        let (threshold, achieved) = match cfg.threshold {
            ThresholdSource::Fixed { threshold } => (threshold, true),
            ThresholdSource::Calibrated { target_pfa } => {
                let target = match &cfg.sweep {
                    SweepAxis::TargetPfa { targets } => targets[i],
                    _ => target_pfa,
                };
                let cal = calibration
                    .as_ref()
                    .expect("calibrated source prepared above")
                    .calibrate(target, cfg.candidate_thresholds)?;
                (cal.threshold, cal.achieved)
            }
        };
        let per_replicate = (0..u64::from(cfg.replicates))
            .into_par_iter()
            .map(|r| {
                let mut rep_cfg = point_cfg.clone();
                rep_cfg.seed = seeds::derive(seeds::derive(cfg.seed, 1 + i as u64), r);
                let generator = source(rep_cfg)?;
                let mut counts = DetectionCounts::default();
                for idx in 0..generator.total_records() {
                    let record = generator.record(idx)?;
                    let bins = target_bins(generator.grid(), &record.targets)?;
                    let decisions = prepare(&record)?.decide(threshold)?;
                    counts.merge(frame_counts(&decisions, &bins)?);
                }
                Ok(counts)
            })
            .collect::<Result<Vec<_>>>()?;
        let row = aggregate_row(cfg.sweep.value(i), threshold, achieved, &per_replicate);
        on_row(&row);
        rows.push(row);
    }
    Ok(rows)
}

/// Runs the experiment generating datasets directly from their configs
/// (simulated or clutter-free).
pub fn run_experiment<T, P>(
    cfg: &ExperimentConfig<T>,
    prepare: P,
    on_row: impl FnMut(&SweepRow<T>),
) -> Result<Vec<SweepRow<T>>>
where
    T: Real,
    P: Fn(&FrameRecord<T>) -> Result<Prepared<T>> + Sync,
{
    run_experiment_with_source(cfg, |c| DatasetGenerator::new(c, None), prepare, on_row)
}

/// Writes the report rows as CSV. Undefined rates (a sweep point whose
/// replicates had no targets, or no quiet cells) appear as NaN.
pub fn write_report_csv<T: Real, W: Write>(rows: &[SweepRow<T>], out: &mut W) -> io::Result<()> {
    writeln!(
        out,
        "sweep_value,threshold,pd_mean,pd_std,pfa_mean,pfa_std,n_targets,n_cells"
    )?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.sweep_value,
            r.threshold,
            r.pd_mean,
            r.pd_std,
            r.pfa_mean,
            r.pfa_std,
            r.n_targets,
            r.n_cells
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ClutterConfig, CountLaw};
    use crate::eval::metrics::dataset_counts;
    use crate::neural::{NetworkArch, NetworkParams};
    use crate::radar::{noise_frame, steering_matrices, Grid, RadarParams};
    use crate::rdmap::{energy_map, projection_map};
    use crate::detectors::HybridThresholds;

    fn small_radar() -> RadarParams<f64> {
        RadarParams {
            samples_per_chirp: 8,
            chirps_per_dwell: 8,
            ..RadarParams::default()
        }
    }

    fn base_dataset(with: u64, without: u64) -> DatasetConfig<f64> {
        DatasetConfig {
            radar: small_radar(),
            range_bins: 6,
            velocity_bins: 6,
            clutter: ClutterConfig::None,
            target_count: CountLaw::Fixed { count: 2 },
            scnr: ScnrLaw::Fixed { db: 15.0 },
            range_interval: (0.0, 15.0),
            velocity_interval: (-1.0, 1.0),
            embedded_max_offset: None,
            frames_with_targets: with,
            frames_without_targets: without,
            seed: 0,
        }
    }

    /// Peak-normalized projection score map for the record's own grid.
    fn projection_prepare(cfg: &DatasetConfig<f64>) -> impl Fn(&FrameRecord<f64>) -> Result<Prepared<f64>> + Sync {
        let grid = cfg.grid().unwrap();
        let (rmat, vmat) = steering_matrices(&cfg.radar, &grid);
        move |record| {
            let z = projection_map(&record.frame, &rmat, &vmat)?;
            Ok(Prepared::normalized_score_map(z))
        }
    }

    #[test]
    fn single_replicate_row_matches_direct_evaluation() {
        let cfg = ExperimentConfig {
            dataset: base_dataset(8, 4),
            sweep: SweepAxis::Scnr { db: vec![15.0] },
            threshold: ThresholdSource::Fixed { threshold: 0.5 },
            replicates: 1,
            seed: 11,
            ..ExperimentConfig::default()
        };
        let rows = run_experiment(&cfg, projection_prepare(&cfg.dataset), |_| {}).unwrap();
        assert_eq!(rows.len(), 1);

        // Rebuild the single replicate by hand from the documented seed
        // derivation and compare rates.
        let mut rep_cfg = cfg.sweep.apply(0, &cfg.dataset).unwrap();
        rep_cfg.seed = seeds::derive(seeds::derive(cfg.seed, 1), 0);
        let generator = DatasetGenerator::new(rep_cfg.clone(), None).unwrap();
        let prepare = projection_prepare(&rep_cfg);
        let mut decisions = Vec::new();
        let mut bins = Vec::new();
        for idx in 0..generator.total_records() {
            let record = generator.record(idx).unwrap();
            bins.push(target_bins(generator.grid(), &record.targets).unwrap());
            decisions.push(prepare(&record).unwrap().decide(0.5).unwrap());
        }
        let direct = dataset_counts(&decisions, &bins).unwrap();
        assert_eq!(rows[0].pd_mean, direct.pd().unwrap());
        assert_eq!(rows[0].pfa_mean, direct.pfa().unwrap());
        assert_eq!(rows[0].pd_std, 0.0);
        assert_eq!(rows[0].n_targets, direct.targets);
        assert_eq!(rows[0].n_cells, direct.no_target_cells);
    }

    #[test]
    fn reruns_are_deterministic_and_streamed_in_order() {
        let cfg = ExperimentConfig {
            dataset: base_dataset(5, 2),
            sweep: SweepAxis::Scnr {
                db: vec![-10.0, 15.0],
            },
            threshold: ThresholdSource::Fixed { threshold: 0.6 },
            replicates: 3,
            seed: 21,
            ..ExperimentConfig::default()
        };
        let mut streamed = Vec::new();
        let first = run_experiment(&cfg, projection_prepare(&cfg.dataset), |row| {
            streamed.push(*row)
        })
        .unwrap();
        let second = run_experiment(&cfg, projection_prepare(&cfg.dataset), |_| {}).unwrap();
        assert_eq!(first, second);
        assert_eq!(first, streamed);
        assert_eq!(first[0].sweep_value, -10.0);
        assert_eq!(first[1].sweep_value, 15.0);
    }

    #[test]
    fn stronger_targets_are_detected_more_often() {
        // A grid large enough that one neighbor box is a small fraction
        // of the cells, so noise peaks rarely land inside it.
        let dataset = DatasetConfig {
            radar: RadarParams {
                samples_per_chirp: 16,
                chirps_per_dwell: 16,
                ..RadarParams::default()
            },
            range_bins: 12,
            velocity_bins: 12,
            clutter: ClutterConfig::None,
            target_count: CountLaw::Fixed { count: 1 },
            scnr: ScnrLaw::Fixed { db: 15.0 },
            range_interval: (0.0, 33.0),
            velocity_interval: (-2.0, 2.0),
            embedded_max_offset: None,
            frames_with_targets: 12,
            frames_without_targets: 0,
            seed: 0,
        };
        let cfg = ExperimentConfig {
            dataset,
            sweep: SweepAxis::Scnr {
                db: vec![-20.0, 20.0],
            },
            threshold: ThresholdSource::Fixed { threshold: 0.7 },
            replicates: 2,
            seed: 33,
            ..ExperimentConfig::default()
        };
        let rows = run_experiment(&cfg, projection_prepare(&cfg.dataset), |_| {}).unwrap();
        assert!(
            rows[1].pd_mean > rows[0].pd_mean + 0.2,
            "weak {} vs strong {}",
            rows[0].pd_mean,
            rows[1].pd_mean
        );
        assert!(rows[1].pd_mean > 0.9);
    }

    #[test]
    fn calibration_tracks_the_false_alarm_target() {
        let cfg = ExperimentConfig {
            dataset: base_dataset(6, 6),
            sweep: SweepAxis::Scnr { db: vec![15.0] },
            threshold: ThresholdSource::Calibrated { target_pfa: 0.1 },
            replicates: 3,
            calibration_frames_with_targets: 10,
            calibration_frames_without_targets: 10,
            candidate_thresholds: 16,
            seed: 44,
            ..ExperimentConfig::default()
        };
        let rows = run_experiment(&cfg, projection_prepare(&cfg.dataset), |_| {}).unwrap();
        let row = rows[0];
        assert!(row.achieved);
        assert!(row.threshold > 0.0 && row.threshold < 1.0);
        assert!(
            (0.02..=0.2).contains(&row.pfa_mean),
            "held-out false-alarm rate {} drifted from the 0.1 target",
            row.pfa_mean
        );
    }

    #[test]
    fn false_alarm_sweep_orders_thresholds() {
        let cfg = ExperimentConfig {
            dataset: base_dataset(4, 8),
            sweep: SweepAxis::TargetPfa {
                targets: vec![0.3, 0.02],
            },
            threshold: ThresholdSource::Calibrated { target_pfa: 0.3 },
            replicates: 2,
            calibration_frames_with_targets: 8,
            calibration_frames_without_targets: 12,
            candidate_thresholds: 20,
            seed: 55,
            ..ExperimentConfig::default()
        };
        let rows = run_experiment(&cfg, projection_prepare(&cfg.dataset), |_| {}).unwrap();
        assert_eq!(rows.len(), 2);
        // A stricter target demands a higher cut.
        assert!(rows[1].threshold >= rows[0].threshold);
        assert!(rows[1].pfa_mean <= rows[0].pfa_mean + 0.05);
    }

    #[test]
    fn sweep_application_rewrites_the_right_field() {
        let base = base_dataset(1, 0);
        let scnr = SweepAxis::Scnr { db: vec![3.0] }.apply(0, &base).unwrap();
        assert_eq!(scnr.scnr, ScnrLaw::Fixed { db: 3.0 });

        let counts = SweepAxis::<f64>::TargetCount { counts: vec![5] }
            .apply(0, &base)
            .unwrap();
        assert_eq!(counts.target_count, CountLaw::Fixed { count: 5 });

        let unchanged = SweepAxis::<f64>::TargetPfa {
            targets: vec![0.01],
        }
        .apply(0, &base)
        .unwrap();
        assert_eq!(unchanged, base);

        let mut cluttered = base.clone();
        cluttered.clutter = ClutterConfig::Simulated(crate::clutter::ClutterSpec {
            shape: ShapeLaw::Uniform { lo: 0.1, hi: 1.5 },
            ..crate::clutter::ClutterSpec::default()
        });
        let swept = SweepAxis::TextureShape { nu: vec![0.2] }
            .apply(0, &cluttered)
            .unwrap();
        match swept.clutter {
            ClutterConfig::Simulated(spec) => {
                assert_eq!(spec.shape, ShapeLaw::Fixed { nu: 0.2 })
            }
            other => panic!("unexpected clutter config {other:?}"),
        }

        assert!(SweepAxis::TextureShape { nu: vec![0.2] }
            .apply(0, &base)
            .is_err());
    }

    #[test]
    fn invalid_configs_are_rejected_before_any_work() {
        let ok = ExperimentConfig {
            dataset: base_dataset(2, 0),
            sweep: SweepAxis::Scnr { db: vec![0.0] },
            threshold: ThresholdSource::Fixed { threshold: 0.5 },
            replicates: 1,
            seed: 0,
            ..ExperimentConfig::default()
        };
        assert!(ok.validate().is_ok());

        let mut bad = ok.clone();
        bad.replicates = 0;
        assert!(bad.validate().is_err());

        let mut bad = ok.clone();
        bad.sweep = SweepAxis::Scnr { db: vec![] };
        assert!(bad.validate().is_err());

        let mut bad = ok.clone();
        bad.sweep = SweepAxis::TargetPfa {
            targets: vec![0.01],
        };
        assert!(bad.validate().is_err(), "false-alarm sweep with fixed threshold");

        let mut bad = ok.clone();
        bad.sweep = SweepAxis::TextureShape { nu: vec![0.5] };
        assert!(bad.validate().is_err(), "texture sweep without clutter");

        let mut bad = ok.clone();
        bad.threshold = ThresholdSource::Calibrated { target_pfa: 0.0 };
        assert!(bad.validate().is_err());

        let mut bad = ok;
        bad.dataset.frames_with_targets = 0;
        bad.dataset.frames_without_targets = 0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn aggregation_is_order_independent() {
        let counts: Vec<DetectionCounts> = (0..7)
            .map(|i| DetectionCounts {
                targets: 10,
                detected: i,
                no_target_cells: 100,
                false_alarm_cells: 7 - i,
            })
            .collect();
        let forward = aggregate_row(1.0, 0.5f64, true, &counts);
        let mut shuffled = counts.clone();
        shuffled.reverse();
        shuffled.swap(0, 3);
        let reordered = aggregate_row(1.0, 0.5f64, true, &shuffled);
        assert_eq!(forward, reordered);

        let (mean, std) = mean_std(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(mean, 2.5);
        assert!((std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(vec![0.7]), (0.7, 0.0));
        assert!(mean_std(vec![]).0.is_nan());
    }

    #[test]
    fn prepared_fusion_matches_the_live_detector() {
        let params = small_radar();
        let grid = Grid::new(&params, 4, 5).unwrap();
        let (rmat, vmat) = steering_matrices(&params, &grid);
        let range_net = NetworkParams::init(
            NetworkArch::new((8, 16), vec![(4, 8)], 4).unwrap(),
            &mut seeds::stream_rng(1, 0),
        );
        let doppler_net = NetworkParams::init(
            NetworkArch::new((8, 16), vec![(4, 8)], 5).unwrap(),
            &mut seeds::stream_rng(2, 0),
        );
        let det = HybridDetector::new(&range_net, &doppler_net, &rmat, &vmat).unwrap();
        for seed in 0..4 {
            let frame = noise_frame(&params, &mut seeds::stream_rng(seed, 0));
            for variant in [
                HybridVariant::Combined,
                HybridVariant::MarginalsOnly,
                HybridVariant::ProjectionOnly,
            ] {
                let prepared = Prepared::fusion(&det, &frame, variant).unwrap();
                for t in [0.2, 0.5, 0.8] {
                    assert_eq!(
                        prepared.decide(t).unwrap(),
                        det.detect_variant(&frame, HybridThresholds::shared(t), variant)
                            .unwrap()
                    );
                }
                let mut pool = Vec::new();
                prepared.pool_into(&mut pool);
                assert!(pool.iter().all(|&v| (0.0..1.0).contains(&v)));
            }
        }
    }

    #[test]
    fn projection_scores_equal_energy_scores_at_matched_thresholds() {
        let params = small_radar();
        let grid = Grid::new(&params, 6, 6).unwrap();
        let (rmat, vmat) = steering_matrices(&params, &grid);
        for seed in 10..15 {
            let frame = noise_frame(&params, &mut seeds::stream_rng(seed, 0));
            let z = Prepared::normalized_score_map(
                projection_map(&frame, &rmat, &vmat).unwrap(),
            );
            let e = Prepared::normalized_score_map(energy_map(&frame, &rmat, &vmat).unwrap());
            for t in [0.3, 0.6, 0.9] {
                assert_eq!(
                    z.decide(t).unwrap(),
                    e.decide(t * t).unwrap(),
                    "seed {seed} threshold {t}"
                );
            }
        }
    }

    #[test]
    fn report_csv_has_the_contract_header() {
        let rows = vec![SweepRow {
            sweep_value: 0.5,
            threshold: 1.25f64,
            achieved: true,
            pd_mean: 0.75,
            pd_std: 0.01,
            pfa_mean: 0.001,
            pfa_std: 0.0002,
            n_targets: 40,
            n_cells: 9000,
        }];
        let mut buf = Vec::new();
        write_report_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "sweep_value,threshold,pd_mean,pd_std,pfa_mean,pfa_std,n_targets,n_cells"
        );
        let row = lines.next().unwrap();
        assert_eq!(row, "0.5,1.25,0.75,0.01,0.001,0.0002,40,9000");
        assert!(lines.next().is_none());
    }
}
