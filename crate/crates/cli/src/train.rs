//! `train`: fit a marginal detection network and write a checkpoint.

use std::fmt::Write as _;

use clutterlab_core::dataset::{DatasetGenerator, FrameRecord};
use clutterlab_core::neural::{
    load_checkpoint, write_checkpoint, Checkpoint, NetworkArch, TrainData, Trainer,
};
use clutterlab_core::rdmap::{DetectionAxis, PreprocessMode};
use clutterlab_core::seeds;

use crate::config::{check_out_dir, load_archive, load_toml, resolve_path, TrainFile};
use crate::manifest::{write_atomic, RunManifest, Timings};
use crate::{runtime_error, validation_error, CliError, CliResult, RunContext, TrainArgs};

/// Seed tag of the validation split. Epoch regeneration tags are the
/// epoch numbers themselves, so this can never collide with one.
const VALIDATION_TAG: u64 = u64::MAX;

pub const HISTORY_HEADER: &str = "epoch,learning_rate,train_loss,train_occupied_bce,train_empty_bce,val_loss,val_occupied_bce,val_empty_bce";

pub fn run(args: &TrainArgs, ctx: &RunContext) -> CliResult<()> {
    let mut timings = Timings::new();

    let (mut file, base): (TrainFile, _) = load_toml(&args.common.config)?;
    if let Some(seed) = ctx.seed_override {
        file.train.seed = seed;
        file.dataset.seed = seed;
    }
    let axis = args.mode.or(file.mode).ok_or_else(|| {
        CliError::validation("detection axis missing: pass --mode or set mode in the config")
    })?;
    file.mode = Some(axis);
    let mut mode = match axis.detection_axis() {
        DetectionAxis::Range => PreprocessMode::range(),
        DetectionAxis::Doppler => PreprocessMode::doppler(),
    };
    if file.standardize {
        mode = mode.with_standardization();
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
    let generator = DatasetGenerator::new(file.dataset.clone(), archive.clone())
        .map_err(validation_error)?;
    if generator.total_records() == 0 {
        return Err(CliError::validation(
            "dataset provides no training frames; set dataset.frames_with_targets or dataset.frames_without_targets",
        ));
    }

    let params = &file.dataset.radar;
    let input = match axis.detection_axis() {
        DetectionAxis::Range => (params.k(), 2 * params.n()),
        DetectionAxis::Doppler => (params.n(), 2 * params.k()),
    };
    let output_dim = match axis.detection_axis() {
        DetectionAxis::Range => file.dataset.range_bins,
        DetectionAxis::Doppler => file.dataset.velocity_bins,
    };
    let blocks = file.blocks.iter().map(|b| (b[0], b[1])).collect();
    let arch = NetworkArch::new(input, blocks, output_dim).map_err(validation_error)?;
    file.train.validate().map_err(validation_error)?;

    let mut trainer: Trainer<f64> = match &args.resume {
        None => Trainer::new(file.train.clone(), mode, arch.clone()).map_err(validation_error)?,
        Some(p) => {
            let p = resolve_path(&base, p);
            let mut ckpt = load_checkpoint(&p).map_err(|e| {
                CliError::validation(format!("checkpoint {}: {e}", p.display()))
            })?;
            let mut want = file.train.clone();
            let mut have = ckpt.config.clone();
            want.epochs = 0;
            have.epochs = 0;
            if want != have {
                return Err(CliError::validation(
                    "resume config differs from the checkpoint in a [train] field other than epochs",
                ));
            }
            if ckpt.mode != mode {
                return Err(CliError::validation(format!(
                    "checkpoint {} holds a {} network ({}standardized); this run asks for {} ({}standardized)",
                    p.display(),
                    ckpt.mode.axis.label(),
                    if ckpt.mode.standardize { "" } else { "un" },
                    mode.axis.label(),
                    if mode.standardize { "" } else { "un" },
                )));
            }
            if *ckpt.network.arch() != arch {
                return Err(CliError::validation(format!(
                    "checkpoint {} was trained with a different architecture",
                    p.display()
                )));
            }
            ckpt.config.epochs = file.train.epochs;
            ckpt.into_trainer()
        }
    };

    let val_records: Option<Vec<FrameRecord<f64>>> = match &file.validation {
        Some(split) => {
            let mut cfg = file.dataset.clone();
            cfg.frames_with_targets = split.frames_with_targets;
            cfg.frames_without_targets = split.frames_without_targets;
            cfg.seed = seeds::derive(file.dataset.seed, VALIDATION_TAG);
            let vgen = DatasetGenerator::new(cfg, archive).map_err(validation_error)?;
            if vgen.total_records() == 0 {
                return Err(CliError::validation(
                    "validation split declares zero frames; drop [validation] or give it counts",
                ));
            }
            Some(vgen.generate_all().map_err(runtime_error)?)
        }
        None => None,
    };
    check_out_dir(&args.common.out)?;
    timings.mark("validate");

    let target_epochs = file.train.epochs;
    let remaining = target_epochs.saturating_sub(trainer.epochs_done());
    for _ in 0..remaining {
        trainer
            .train_epochs(
                TrainData::OnTheFly(&generator),
                val_records.as_deref(),
                1,
            )
            .map_err(runtime_error)?;
        let s = trainer.history().last().expect("one epoch just ran");
        match s.val_loss {
            Some(v) => println!(
                "epoch {:>4}/{target_epochs}  lr {:.3e}  train loss {:.6}  val loss {:.6}",
                s.epoch, s.learning_rate, s.train_loss, v
            ),
            None => println!(
                "epoch {:>4}/{target_epochs}  lr {:.3e}  train loss {:.6}",
                s.epoch, s.learning_rate, s.train_loss
            ),
        }
    }
    timings.mark("train");

    let checkpoint = Checkpoint::from_trainer(&trainer);
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, &checkpoint).map_err(runtime_error)?;
    write_atomic(&args.common.out, &buf)?;

    let history_path = {
        let mut name = args
            .common
            .out
            .file_name()
            .map(|n| n.to_os_string())
            .unwrap_or_default();
        name.push(".history.csv");
        args.common.out.with_file_name(name)
    };
    let mut csv = String::from(HISTORY_HEADER);
    csv.push('\n');
    for s in trainer.history() {
        let _ = write!(csv, "{},{},{}", s.epoch, s.learning_rate, s.train_loss);
        for v in [
            s.train_occupied_bce,
            s.train_empty_bce,
            s.val_loss,
            s.val_occupied_bce,
            s.val_empty_bce,
        ] {
            match v {
                Some(v) => {
                    let _ = write!(csv, ",{v}");
                }
                None => csv.push(','),
            }
        }
        csv.push('\n');
    }
    write_atomic(&history_path, csv.as_bytes())?;
    timings.mark("write");

    println!(
        "checkpoint: {} ({} parameters, {} epochs done, {} this run)",
        args.common.out.display(),
        trainer.network().param_count(),
        trainer.epochs_done(),
        remaining,
    );
    let outputs = vec![args.common.out.clone(), history_path];
    RunManifest::new(ctx, Some(file.train.seed), &file, &outputs, timings.finish())?
        .write_beside(&args.common.out)?;
    Ok(())
}
