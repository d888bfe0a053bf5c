//! `evaluate`: run a sweep/replicate experiment into a report CSV.

use std::path::{Path, PathBuf};

use clutterlab_core::dataset::DatasetGenerator;
use clutterlab_core::detectors::HybridVariant;
use clutterlab_core::eval::{run_experiment_with_source, write_report_csv, ThresholdSource};
use clutterlab_core::radar::Grid;

use crate::config::{
    check_out_dir, load_archive, load_toml, resolve_path, EvaluateFile, ThresholdFile,
};
use crate::detector::DetectorEngine;
use crate::manifest::{write_atomic, RunManifest, Timings};
use crate::{runtime_error, validation_error, CliError, CliResult, EvaluateArgs, RunContext};

pub fn run(args: &EvaluateArgs, ctx: &RunContext) -> CliResult<()> {
    let mut timings = Timings::new();

    let (mut file, base): (EvaluateFile, _) = load_toml(&args.common.config)?;
    if let Some(seed) = ctx.seed_override {
        file.experiment.seed = seed;
    }
    file.detector.resolve_paths(&base);

    if file.threshold_file.is_some() && file.variants.is_some() {
        return Err(CliError::validation(
            "threshold_file pins one calibrated variant; drop it or the variants list",
        ));
    }
    if let Some(p) = &file.threshold_file {
        let p = resolve_path(&base, p);
        let (record, _): (ThresholdFile, _) = load_toml(&p)?;
        if record.detector != file.detector {
            return Err(CliError::validation(format!(
                "threshold file {} was calibrated for a different detector",
                p.display()
            )));
        }
        file.experiment.threshold = ThresholdSource::Fixed {
            threshold: record.threshold,
        };
        file.threshold_file = Some(p);
    }

    let variants: Vec<Option<HybridVariant>> = match &file.variants {
        None => vec![None],
        Some(list) => {
            if !file.detector.is_hybrid() {
                return Err(CliError::validation(
                    "variants only apply to the hybrid detector",
                ));
            }
            if list.is_empty() {
                return Err(CliError::validation("variants must not be empty"));
            }
            let mut seen = Vec::new();
            for v in list {
                if seen.contains(v) {
                    return Err(CliError::validation(format!(
                        "variant {} listed twice",
                        v.label()
                    )));
                }
                seen.push(*v);
            }
            list.iter().copied().map(Some).collect()
        }
    };

    let archive = match &file.archive {
        Some(p) => {
            let p = resolve_path(&base, p);
            let loaded = load_archive(&p)?;
            file.archive = Some(p);
            Some(loaded)
        }
        None => None,
    };
    let dataset = &file.experiment.dataset;
    let grid = Grid::new(&dataset.radar, dataset.range_bins, dataset.velocity_bins)
        .map_err(validation_error)?;
    let engine = DetectorEngine::build(&file.detector, &dataset.radar, &grid)?;
    file.experiment.validate().map_err(validation_error)?;
    check_out_dir(&args.common.out)?;
    timings.mark("validate");

    let source =
        |cfg: clutterlab_core::dataset::DatasetConfig<f64>| DatasetGenerator::new(cfg, archive.clone());
    let mut outputs = Vec::new();
    for variant in variants {
        let (run_engine, out_path, name) = match variant {
            None => (engine.clone(), args.common.out.clone(), file.detector.label()),
            Some(v) => (
                engine.clone().with_variant(v)?,
                labeled_path(&args.common.out, v.label()),
                v.label(),
            ),
        };
        let rows = run_experiment_with_source(
            &file.experiment,
            &source,
            |record| run_engine.prepare(record),
            |row| {
                println!(
                    "[{name}] sweep {}  threshold {:.6}  pd {:.4}  pfa {:.4e}",
                    row.sweep_value, row.threshold, row.pd_mean, row.pfa_mean
                );
            },
        )
        .map_err(runtime_error)?;
        let mut buf = Vec::new();
        write_report_csv(&rows, &mut buf)
            .map_err(|e| CliError::runtime(format!("cannot encode the report: {e}")))?;
        write_atomic(&out_path, &buf)?;
        outputs.push(out_path);
        timings.mark(name);
    }

    RunManifest::new(
        ctx,
        Some(file.experiment.seed),
        &file,
        &outputs,
        timings.finish(),
    )?
    .write_beside(&args.common.out)?;
    Ok(())
}

/// `report.csv` + `combined` gives `report.combined.csv`.
fn labeled_path(out: &Path, label: &str) -> PathBuf {
    match out.extension() {
        Some(ext) => out.with_extension(format!("{label}.{}", ext.to_string_lossy())),
        None => out.with_extension(label),
    }
}
