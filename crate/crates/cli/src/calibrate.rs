//! `calibrate`: solve a detector threshold for a false alarm target.

use rayon::prelude::*;

use clutterlab_core::dataset::open_dataset_file;
use clutterlab_core::detectors::{calibrate_threshold, tail_threshold_grid};
use clutterlab_core::eval::{target_bins, CalibrationSet};

use crate::config::{check_out_dir, load_toml, resolve_path, CalibrateFile, ThresholdFile};
use crate::detector::DetectorEngine;
use crate::manifest::{write_atomic, RunManifest, Timings};
use crate::{runtime_error, validation_error, CalibrateArgs, CliError, CliResult, RunContext};

pub fn run(args: &CalibrateArgs, ctx: &RunContext) -> CliResult<()> {
    let mut timings = Timings::new();

    let (mut file, base): (CalibrateFile, _) = load_toml(&args.common.config)?;
    file.dataset = resolve_path(&base, &file.dataset);
    file.detector.resolve_paths(&base);
    if !(file.target_pfa > 0.0 && file.target_pfa <= 1.0) {
        return Err(CliError::validation("target_pfa must lie in (0, 1]"));
    }
    if file.candidates == 0 {
        return Err(CliError::validation("candidates must be at least 1"));
    }
    let mut reader = open_dataset_file::<f64>(&file.dataset).map_err(|e| {
        CliError::validation(format!("dataset {}: {e}", file.dataset.display()))
    })?;
    let header = reader.header().clone();
    if header.total_records() == 0 {
        return Err(CliError::validation(format!(
            "dataset {} holds no records",
            file.dataset.display()
        )));
    }
    let grid = header.grid().map_err(validation_error)?;
    let engine = DetectorEngine::build(&file.detector, &header.radar, &grid)?;
    check_out_dir(&args.common.out)?;
    timings.mark("validate");

    let records = reader.read_all().map_err(runtime_error)?;
    let prepared = records
        .par_iter()
        .map(|record| {
            let bins = target_bins(&grid, &record.targets)?;
            Ok((engine.prepare(record)?, bins))
        })
        .collect::<clutterlab_core::Result<Vec<_>>>()
        .map_err(runtime_error)?;
    timings.mark("prepare");

    let mut pool = Vec::new();
    for (p, _) in &prepared {
        p.pool_into(&mut pool);
    }
    let set: CalibrationSet<f64> = CalibrationSet::new(prepared);
    let grid_points =
        tail_threshold_grid(&pool, file.target_pfa, file.candidates).map_err(runtime_error)?;
    let cal = calibrate_threshold(&grid_points, file.target_pfa, |t| set.pfa_at(t))
        .map_err(runtime_error)?;
    timings.mark("calibrate");

    println!("threshold: {}", cal.threshold);
    println!(
        "achieved false alarm rate: {:.6e} (target {:.6e})",
        cal.achieved_pfa, file.target_pfa
    );
    let grid_text = grid_points
        .iter()
        .map(|t| format!("{t:.6}"))
        .collect::<Vec<_>>()
        .join(", ");
    println!("candidate grid ({} points): {grid_text}", grid_points.len());

    let record = ThresholdFile {
        threshold: cal.threshold,
        target_pfa: file.target_pfa,
        achieved_pfa: cal.achieved_pfa,
        achieved: cal.achieved,
        detector: file.detector.clone(),
    };
    let text = toml::to_string_pretty(&record)
        .map_err(|e| CliError::runtime(format!("cannot encode the threshold record: {e}")))?;
    write_atomic(&args.common.out, text.as_bytes())?;
    let outputs = vec![args.common.out.clone()];
    RunManifest::new(ctx, ctx.seed_override, &file, &outputs, timings.finish())?
        .write_beside(&args.common.out)?;

    if !cal.achieved {
        return Err(CliError::NotAchieved(format!(
            "no candidate threshold reached the {:.3e} target (closest rate {:.3e}); the record at {} is marked achieved = false",
            file.target_pfa,
            cal.achieved_pfa,
            args.common.out.display(),
        )));
    }
    Ok(())
}
