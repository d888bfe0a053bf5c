//! `simulate`: generate a labeled dwell dataset file.

use std::fs::File;
use std::io::{BufWriter, Write};

use clutterlab_core::dataset::{DatasetGenerator, DatasetHeader, DatasetWriter};

use crate::config::{check_out_dir, load_archive, load_toml, resolve_path, SimulateFile};
use crate::manifest::{RunManifest, Timings};
use crate::{runtime_error, validation_error, CliResult, RunContext, SimulateArgs};

pub fn run(args: &SimulateArgs, ctx: &RunContext) -> CliResult<()> {
    let mut timings = Timings::new();

    let (mut file, base): (SimulateFile, _) = load_toml(&args.common.config)?;
    if let Some(seed) = ctx.seed_override {
        file.dataset.seed = seed;
    }
    let archive = match &file.archive {
        Some(p) => {
            let p = resolve_path(&base, p);
            let loaded = load_archive(&p)?;
            file.archive = Some(p);
            Some(loaded)
        }
        None => None,
    };
    let generator =
        DatasetGenerator::new(file.dataset.clone(), archive).map_err(validation_error)?;
    check_out_dir(&args.common.out)?;
    timings.mark("validate");

    // Stream records straight to a temp file, accumulating the power of
    // target-free frames for the interference level report, then move
    // the finished file into place.
    let header = DatasetHeader::for_config(generator.config());
    let tmp = {
        let mut name = args
            .common
            .out
            .file_name()
            .map(|n| n.to_os_string())
            .unwrap_or_default();
        name.push(".tmp");
        args.common.out.with_file_name(name)
    };
    let out_file = File::create(&tmp)
        .map_err(|e| crate::CliError::runtime(format!("cannot create {}: {e}", tmp.display())))?;
    let mut writer =
        DatasetWriter::new(BufWriter::new(out_file), header.clone()).map_err(runtime_error)?;
    let mut quiet_power = 0.0f64;
    let mut quiet_cells = 0u64;
    for index in 0..generator.total_records() {
        let record = generator.record(index).map_err(runtime_error)?;
        if record.targets.is_empty() {
            quiet_power += record.frame.iter().map(|z| z.norm_sqr()).sum::<f64>();
            quiet_cells += record.frame.len() as u64;
        }
        writer.write_record(&record).map_err(runtime_error)?;
    }
    writer
        .finish()
        .and_then(|mut w| Ok(w.flush()?))
        .map_err(runtime_error)?;
    std::fs::rename(&tmp, &args.common.out).map_err(|e| {
        crate::CliError::runtime(format!("cannot move {} into place: {e}", tmp.display()))
    })?;
    timings.mark("generate");

    println!(
        "records: {} ({} with targets, {} without)",
        header.total_records(),
        header.frames_with_targets,
        header.frames_without_targets,
    );
    let noise = file.dataset.radar.noise_power;
    if quiet_cells > 0 && noise > 0.0 {
        let excess = (quiet_power / quiet_cells as f64 / noise - 1.0).max(0.0);
        println!(
            "empirical CNR: {:.2} dB over {} target-free frames",
            10.0 * excess.log10(),
            header.frames_without_targets,
        );
    } else {
        println!("empirical CNR: n/a (no target-free frames)");
    }

    let outputs = vec![args.common.out.clone()];
    RunManifest::new(
        ctx,
        Some(file.dataset.seed),
        &file,
        &outputs,
        timings.finish(),
    )?
    .write_beside(&args.common.out)?;
    Ok(())
}
