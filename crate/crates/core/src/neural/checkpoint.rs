//! Binary persistence of a training run.
//!
//! Layout (all little-endian): magic `RDNN`, version, a mode tag packing
//! the detection axis and the standardization flag, the architecture
//! dims, every parameter as `f64` in declaration order, the optimizer
//! moments, the scheduler state, the epoch counter, and finally the
//! training config echoed as length-prefixed JSON. Parameters are stored
//! at full precision regardless of the working precision, so a
//! single-precision run round-trips bit-exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::adam::AdamState;
use super::net::{GradientSet, NetworkArch, NetworkParams};
use super::scheduler::PlateauScheduler;
use super::train::{TrainConfig, Trainer};
use crate::error::{Error, Result};
use crate::io::{SectionReader, SectionWriter};
use crate::rdmap::{DetectionAxis, PreprocessMode};
use crate::scalar::{real, Real};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"RDNN";
pub const CHECKPOINT_VERSION: u16 = 1;

const MAX_BLOCKS: usize = 64;
const MAX_DIM: usize = 1 << 16;
const MAX_CONFIG_BYTES: usize = 1 << 20;

/// Everything needed to resume or deploy a training run.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub config: TrainConfig,
    pub mode: PreprocessMode,
    pub network: NetworkParams<f64>,
    pub adam: AdamState<f64>,
    pub scheduler: PlateauScheduler,
    pub epochs_done: u32,
}

fn encode_mode(mode: PreprocessMode) -> u8 {
    let axis = match mode.axis {
        DetectionAxis::Range => 0,
        DetectionAxis::Doppler => 1,
    };
    axis | if mode.standardize { 2 } else { 0 }
}

fn decode_mode(tag: u8) -> Option<PreprocessMode> {
    if tag > 3 {
        return None;
    }
    Some(PreprocessMode {
        axis: if tag & 1 == 0 {
            DetectionAxis::Range
        } else {
            DetectionAxis::Doppler
        },
        standardize: tag & 2 != 0,
    })
}

fn cast_grads<T: Real, U: Real>(src: &GradientSet<T>, like: &NetworkParams<U>) -> GradientSet<U> {
    let mut out = GradientSet::zeros_like(like);
    for (dst, s) in out.tensors_mut().iter_mut().zip(src.tensors()) {
        for (d, v) in dst.iter_mut().zip(s.iter()) {
            *d = real::<U>(v.to_f64().expect("finite moment"));
        }
    }
    out
}

impl Checkpoint {
    /// Snapshots a trainer, converting the working precision to `f64`.
    pub fn from_trainer<T: Real>(trainer: &Trainer<T>) -> Self {
        let network = trainer.network().cast::<f64>();
        let adam = AdamState {
            step: trainer.adam().step,
            m: cast_grads(&trainer.adam().m, &network),
            v: cast_grads(&trainer.adam().v, &network),
        };
        Checkpoint {
            config: trainer.config().clone(),
            mode: trainer.mode(),
            network,
            adam,
            scheduler: trainer.scheduler().clone(),
            epochs_done: trainer.epochs_done(),
        }
    }

    /// Rebuilds a trainer in the requested precision.
    pub fn into_trainer<T: Real>(self) -> Trainer<T> {
        let network = self.network.cast::<T>();
        let adam = AdamState {
            step: self.adam.step,
            m: cast_grads(&self.adam.m, &network),
            v: cast_grads(&self.adam.v, &network),
        };
        Trainer::restore(
            self.config,
            self.mode,
            network,
            adam,
            self.scheduler,
            self.epochs_done,
        )
    }

    /// Inference-ready parameters in the requested precision.
    pub fn network_as<T: Real>(&self) -> NetworkParams<T> {
        self.network.cast::<T>()
    }

    /// Checks the checkpoint against an expected mode and output length.
    pub fn require(&self, mode: PreprocessMode, output_dim: usize) -> Result<()> {
        if self.mode != mode {
            return Err(Error::shape(format!(
                "checkpoint holds a {} network ({}standardized), expected {} ({}standardized)",
                self.mode.axis.label(),
                if self.mode.standardize { "" } else { "un" },
                mode.axis.label(),
                if mode.standardize { "" } else { "un" },
            )));
        }
        if self.network.output_dim() != output_dim {
            return Err(Error::shape(format!(
                "checkpoint network emits {} bins, expected {output_dim}",
                self.network.output_dim()
            )));
        }
        Ok(())
    }
}

/// Serializes a checkpoint to any writer.
pub fn write_checkpoint<W: Write>(writer: W, checkpoint: &Checkpoint) -> Result<()> {
    let mut w = SectionWriter::new(writer);
    w.write_magic(CHECKPOINT_MAGIC)?;
    w.write_u16(CHECKPOINT_VERSION)?;
    w.write_u8(encode_mode(checkpoint.mode))?;

    let arch = checkpoint.network.arch();
    w.write_u32(arch.input.0 as u32)?;
    w.write_u32(arch.input.1 as u32)?;
    w.write_u32(arch.blocks.len() as u32)?;
    for &(h, wd) in &arch.blocks {
        w.write_u32(h as u32)?;
        w.write_u32(wd as u32)?;
    }
    w.write_u32(arch.output_dim as u32)?;

    for tensor in checkpoint.network.tensors() {
        for &v in tensor.iter() {
            w.write_f64(v)?;
        }
    }

    w.write_u64(checkpoint.adam.step)?;
    for moments in [&checkpoint.adam.m, &checkpoint.adam.v] {
        for tensor in moments.tensors() {
            for &v in tensor.iter() {
                w.write_f64(v)?;
            }
        }
    }

    w.write_f64(checkpoint.scheduler.learning_rate())?;
    w.write_f64(checkpoint.scheduler.best().unwrap_or(f64::NAN))?;
    w.write_u32(checkpoint.scheduler.stale_epochs())?;
    w.write_u32(checkpoint.epochs_done)?;

    let json = serde_json::to_vec(&checkpoint.config)
        .map_err(|e| Error::invalid(format!("config serialization failed: {e}")))?;
    w.write_u32(json.len() as u32)?;
    w.write_bytes(&json)?;
    w.flush()
}

/// Parses a checkpoint from any reader, rejecting trailing bytes.
pub fn read_checkpoint<R: Read>(reader: R) -> Result<Checkpoint> {
    let mut r = SectionReader::new(reader);
    r.enter("checkpoint header");
    r.expect_magic(CHECKPOINT_MAGIC)?;
    let version = r.read_u16()?;
    if version != CHECKPOINT_VERSION {
        return Err(r.format_error(format!("unsupported version {version}")));
    }
    let tag = r.read_u8()?;
    let mode =
        decode_mode(tag).ok_or_else(|| r.format_error(format!("unknown mode tag {tag}")))?;

    let input = (r.read_u32()? as usize, r.read_u32()? as usize);
    let n_blocks = r.read_u32()? as usize;
    if n_blocks == 0 || n_blocks > MAX_BLOCKS {
        return Err(r.format_error(format!("implausible block count {n_blocks}")));
    }
    let mut blocks = Vec::with_capacity(n_blocks);
    for _ in 0..n_blocks {
        blocks.push((r.read_u32()? as usize, r.read_u32()? as usize));
    }
    let output_dim = r.read_u32()? as usize;
    for &(h, wd) in std::iter::once(&input).chain(blocks.iter()) {
        if h > MAX_DIM || wd > MAX_DIM {
            return Err(r.format_error(format!("implausible dimension {h}x{wd}")));
        }
    }
    if output_dim > MAX_DIM {
        return Err(r.format_error(format!("implausible output length {output_dim}")));
    }
    let arch = NetworkArch::new(input, blocks, output_dim)
        .map_err(|e| r.format_error(format!("invalid architecture: {e}")))?;

    r.enter("checkpoint parameters");
    let mut network = NetworkParams::<f64>::zeros(arch);
    for tensor in network.tensors_mut().iter_mut() {
        let values = r.read_f64_vec(tensor.len())?;
        for (d, v) in tensor.iter_mut().zip(values) {
            *d = v;
        }
    }

    r.enter("checkpoint optimizer");
    let step = r.read_u64()?;
    let mut adam = AdamState::new(&network);
    for moments in [&mut adam.m, &mut adam.v] {
        for tensor in moments.tensors_mut().iter_mut() {
            let values = r.read_f64_vec(tensor.len())?;
            for (d, v) in tensor.iter_mut().zip(values) {
                *d = v;
            }
        }
    }
    adam.step = step;

    r.enter("checkpoint scheduler");
    let learning_rate = r.read_f64()?;
    let best_raw = r.read_f64()?;
    let stale = r.read_u32()?;
    let epochs_done = r.read_u32()?;

    r.enter("checkpoint config");
    let json_len = r.read_u32()? as usize;
    if json_len > MAX_CONFIG_BYTES {
        return Err(r.format_error(format!("implausible config length {json_len}")));
    }
    let json = r.read_bytes(json_len)?;
    let config: TrainConfig = serde_json::from_slice(&json)
        .map_err(|e| r.format_error(format!("config echo does not parse: {e}")))?;
    config
        .validate()
        .map_err(|e| r.format_error(format!("config echo invalid: {e}")))?;

    let mut probe = [0u8; 1];
    if r.fill_or_eof(&mut probe)? {
        return Err(r.format_error("trailing data after checkpoint"));
    }

    let scheduler = PlateauScheduler::restore(
        learning_rate,
        config.scheduler_factor,
        config.scheduler_patience,
        config.scheduler_min_delta,
        (!best_raw.is_nan()).then_some(best_raw),
        stale,
    );
    Ok(Checkpoint {
        config,
        mode,
        network,
        adam,
        scheduler,
        epochs_done,
    })
}

pub fn save_checkpoint(path: impl AsRef<Path>, checkpoint: &Checkpoint) -> Result<()> {
    let file = File::create(path.as_ref())?;
    write_checkpoint(BufWriter::new(file), checkpoint)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let file = File::open(path.as_ref())?;
    read_checkpoint(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{
        ClutterConfig, CountLaw, DatasetConfig, DatasetGenerator, ScnrLaw,
    };
    use crate::neural::train::TrainData;
    use crate::radar::RadarParams;

    fn tiny_generator<T: Real>(seed: u64) -> DatasetGenerator<T> {
        let config = DatasetConfig {
            radar: RadarParams {
                samples_per_chirp: 8,
                chirps_per_dwell: 8,
                ..RadarParams::default()
            },
            range_bins: 4,
            velocity_bins: 5,
            clutter: ClutterConfig::None,
            target_count: CountLaw::Fixed { count: 1 },
            scnr: ScnrLaw::Fixed { db: real(15.0) },
            range_interval: (real(0.0), real(9.0)),
            velocity_interval: (real(-0.4), real(0.4)),
            embedded_max_offset: None,
            frames_with_targets: 8,
            frames_without_targets: 8,
            seed,
        };
        DatasetGenerator::new(config, None).unwrap()
    }

    fn tiny_arch() -> NetworkArch {
        NetworkArch::new((8, 16), vec![(6, 12), (4, 8), (2, 4)], 5).unwrap()
    }

    fn tiny_config(epochs: u32) -> TrainConfig {
        TrainConfig {
            batch_size: 16,
            epochs,
            seed: 42,
            ..TrainConfig::default()
        }
    }

    fn trained_trainer(epochs: u32) -> Trainer<f64> {
        let generator = tiny_generator(3);
        let mut trainer =
            Trainer::new(tiny_config(epochs), PreprocessMode::doppler(), tiny_arch()).unwrap();
        trainer.train(TrainData::OnTheFly(&generator), None).unwrap();
        trainer
    }

    fn grads_equal(a: &GradientSet<f64>, b: &GradientSet<f64>) -> bool {
        a.tensors()
            .into_iter()
            .zip(b.tensors())
            .all(|(x, y)| x == y)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let trainer = trained_trainer(2);
        let checkpoint = Checkpoint::from_trainer(&trainer);
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &checkpoint).unwrap();
        let restored = read_checkpoint(buf.as_slice()).unwrap();

        assert_eq!(restored.config, checkpoint.config);
        assert_eq!(restored.mode, checkpoint.mode);
        assert_eq!(restored.network, checkpoint.network);
        assert_eq!(restored.adam.step, checkpoint.adam.step);
        assert!(grads_equal(&restored.adam.m, &checkpoint.adam.m));
        assert!(grads_equal(&restored.adam.v, &checkpoint.adam.v));
        assert_eq!(restored.scheduler, checkpoint.scheduler);
        assert_eq!(restored.epochs_done, 2);
    }

    #[test]
    fn fresh_trainer_scheduler_best_round_trips_as_none() {
        let trainer =
            Trainer::<f64>::new(tiny_config(1), PreprocessMode::range(), tiny_arch()).unwrap();
        let checkpoint = Checkpoint::from_trainer(&trainer);
        assert!(checkpoint.scheduler.best().is_none());
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &checkpoint).unwrap();
        let restored = read_checkpoint(buf.as_slice()).unwrap();
        assert!(restored.scheduler.best().is_none());
        assert_eq!(restored.epochs_done, 0);
    }

    #[test]
    fn resumed_training_matches_uninterrupted_run() {
        let generator = tiny_generator(3);
        let straight = trained_trainer(4);

        let mut first = Trainer::<f64>::new(
            tiny_config(4),
            PreprocessMode::doppler(),
            tiny_arch(),
        )
        .unwrap();
        first.train_epochs(TrainData::OnTheFly(&generator), None, 2).unwrap();
        let checkpoint = Checkpoint::from_trainer(&first);
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &checkpoint).unwrap();
        let mut resumed: Trainer<f64> =
            read_checkpoint(buf.as_slice()).unwrap().into_trainer();
        assert_eq!(resumed.epochs_done(), 2);
        resumed.train(TrainData::OnTheFly(&generator), None).unwrap();

        assert_eq!(resumed.epochs_done(), 4);
        assert_eq!(resumed.network(), straight.network());
        assert_eq!(
            resumed.scheduler().learning_rate(),
            straight.scheduler().learning_rate()
        );
    }

    #[test]
    fn single_precision_round_trip_is_exact() {
        let generator = tiny_generator(5);
        let mut trainer =
            Trainer::<f32>::new(tiny_config(1), PreprocessMode::doppler(), tiny_arch()).unwrap();
        trainer.train(TrainData::OnTheFly(&generator), None).unwrap();
        let checkpoint = Checkpoint::from_trainer(&trainer);
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &checkpoint).unwrap();
        let restored: Trainer<f32> = read_checkpoint(buf.as_slice()).unwrap().into_trainer();
        assert_eq!(restored.network(), trainer.network());
    }

    #[test]
    fn file_round_trip_and_require() {
        let trainer = trained_trainer(1);
        let checkpoint = Checkpoint::from_trainer(&trainer);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.rdnn");
        save_checkpoint(&path, &checkpoint).unwrap();
        let restored = load_checkpoint(&path).unwrap();
        assert_eq!(restored.network, checkpoint.network);

        assert!(restored.require(PreprocessMode::doppler(), 5).is_ok());
        assert!(restored.require(PreprocessMode::range(), 5).is_err());
        assert!(restored.require(PreprocessMode::doppler(), 64).is_err());
        assert!(restored
            .require(PreprocessMode::doppler().with_standardization(), 5)
            .is_err());
    }

    #[test]
    fn corruption_and_truncation_are_format_errors() {
        let trainer = trained_trainer(1);
        let checkpoint = Checkpoint::from_trainer(&trainer);
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &checkpoint).unwrap();

        let mut bad_magic = buf.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            read_checkpoint(bad_magic.as_slice()),
            Err(Error::Format { .. })
        ));

        let mut bad_mode = buf.clone();
        bad_mode[6] = 9;
        let err = read_checkpoint(bad_mode.as_slice()).unwrap_err();
        assert!(err.to_string().contains("mode tag"), "{err}");

        let truncated = &buf[..buf.len() / 2];
        assert!(matches!(
            read_checkpoint(truncated),
            Err(Error::Format { .. })
        ));

        let mut trailing = buf.clone();
        trailing.push(0);
        let err = read_checkpoint(trailing.as_slice()).unwrap_err();
        assert!(err.to_string().contains("trailing"), "{err}");
    }

    #[test]
    fn mode_tags_cover_all_variants() {
        for mode in [
            PreprocessMode::range(),
            PreprocessMode::doppler(),
            PreprocessMode::range().with_standardization(),
            PreprocessMode::doppler().with_standardization(),
        ] {
            assert_eq!(decode_mode(encode_mode(mode)), Some(mode));
        }
        assert_eq!(decode_mode(4), None);
    }
}
