//! `inspect`: dump one dataset record as a plot-ready CSV.
//!
//! The output has one `cell` row per grid cell carrying the energy map
//! value, followed by one `target` row per ground-truth target with its
//! nearest grid bin, true coordinates, and SCNR in dB.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;

use clutterlab_core::dataset::open_dataset_file;
use clutterlab_core::radar::steering_matrices;
use clutterlab_core::rdmap::energy_map;

use crate::config::check_out_dir;
use crate::manifest::{write_atomic, RunManifest, Timings};
use crate::{runtime_error, validation_error, CliError, CliResult, InspectArgs, RunContext};

pub const INSPECT_HEADER: &str = "kind,row,col,range_m,velocity_mps,value";

/// What the manifest echoes for an inspection run.
#[derive(Debug, Serialize)]
struct InspectConfig {
    dataset: PathBuf,
    index: u64,
}

pub fn run(args: &InspectArgs, ctx: &RunContext) -> CliResult<()> {
    let mut timings = Timings::new();

    let dataset = std::path::absolute(&args.dataset).unwrap_or_else(|_| args.dataset.clone());
    let mut reader = open_dataset_file::<f64>(&dataset)
        .map_err(|e| CliError::validation(format!("dataset {}: {e}", dataset.display())))?;
    let header = reader.header().clone();
    if args.index >= header.total_records() {
        return Err(CliError::validation(format!(
            "record index {} out of range ({} records)",
            args.index,
            header.total_records()
        )));
    }
    let grid = header.grid().map_err(validation_error)?;
    check_out_dir(&args.out)?;
    timings.mark("validate");

    let mut record = None;
    for _ in 0..=args.index {
        record = reader.next_record().map_err(runtime_error)?;
    }
    let record = record
        .ok_or_else(|| CliError::runtime("dataset ended before the requested record"))?;
    let (rmat, vmat) = steering_matrices(&header.radar, &grid);
    let energy = energy_map(&record.frame, &rmat, &vmat).map_err(runtime_error)?;

    let mut csv = String::from(INSPECT_HEADER);
    csv.push('\n');
    let ranges = grid.range_bins();
    let velocities = grid.velocity_bins();
    for ((m, l), v) in energy.indexed_iter() {
        let _ = writeln!(csv, "cell,{m},{l},{},{},{v}", ranges[m], velocities[l]);
    }
    for target in &record.targets {
        let m = grid.nearest_range_bin(target.range).map_err(runtime_error)?;
        let l = grid
            .nearest_velocity_bin(target.velocity)
            .map_err(runtime_error)?;
        let _ = writeln!(
            csv,
            "target,{m},{l},{},{},{}",
            target.range, target.velocity, target.scnr_db
        );
    }
    write_atomic(&args.out, csv.as_bytes())?;
    timings.mark("write");

    println!(
        "record {}: {} cells, {} targets",
        args.index,
        energy.len(),
        record.targets.len()
    );
    let config = InspectConfig {
        dataset,
        index: args.index,
    };
    let outputs = vec![args.out.clone()];
    RunManifest::new(ctx, ctx.seed_override, &config, &outputs, timings.finish())?
        .write_beside(&args.out)?;
    Ok(())
}
