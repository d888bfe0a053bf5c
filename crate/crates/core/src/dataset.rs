//! Target sampling, label construction, dataset generation and the
//! on-disk dataset container.
//!
//! Every record owns an independent random stream derived from the master
//! seed and the record index, so generation order (sequential, parallel,
//! or regenerated per epoch) never changes the content. Within a record
//! the stream is consumed in a fixed order: target draws, then clutter,
//! then noise. A label-only pass can therefore replay just the target
//! prefix of a record without paying for frame synthesis.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clutter::{ClutterSource, ClutterSpec, RecordedArchive, SimulatedClutter};
use crate::error::{Error, Result};
use crate::io::{SectionReader, SectionWriter};
use crate::radar::{
    amplitude_for_scnr, compose_frame, noise_frame, ComplexFrame, Grid, RadarParams, Target,
};
use crate::scalar::{draw_uniform, real, Real};
use crate::seeds;

/// Number of targets per frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum CountLaw {
    Fixed { count: u32 },
    /// Uniform over the inclusive integer range.
    Uniform { lo: u32, hi: u32 },
}

impl CountLaw {
    pub fn validate(&self) -> Result<()> {
        if let CountLaw::Uniform { lo, hi } = self {
            if lo > hi {
                return Err(Error::invalid("target count bounds must be ordered"));
            }
        }
        Ok(())
    }

    fn min_count(&self) -> u32 {
        match *self {
            CountLaw::Fixed { count } => count,
            CountLaw::Uniform { lo, .. } => lo,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        match *self {
            CountLaw::Fixed { count } => count,
            CountLaw::Uniform { lo, hi } => rng.gen_range(lo..=hi),
        }
    }
}

/// Per-target SCNR in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum ScnrLaw<T: Real> {
    Fixed { db: T },
    Uniform { lo: T, hi: T },
}

impl<T: Real> ScnrLaw<T> {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ScnrLaw::Fixed { db } => {
                if !db.is_finite() && db != T::neg_infinity() {
                    return Err(Error::invalid("scnr must be finite or -inf"));
                }
            }
            ScnrLaw::Uniform { lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() || lo > hi {
                    return Err(Error::invalid("scnr bounds must be finite and ordered"));
                }
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        match *self {
            ScnrLaw::Fixed { db } => db,
            ScnrLaw::Uniform { lo, hi } => draw_uniform(
                rng,
                lo.to_f64().expect("finite"),
                hi.to_f64().expect("finite"),
            ),
        }
    }
}

/// Interference content of generated frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClutterConfig<T: Real> {
    /// Thermal noise only.
    None,
    Simulated(ClutterSpec<T>),
    /// Crops from a recorded archive supplied alongside the config.
    Recorded { cnr_db: T },
}

/// Full description of one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig<T: Real> {
    pub radar: RadarParams<T>,
    pub range_bins: usize,
    pub velocity_bins: usize,
    pub clutter: ClutterConfig<T>,
    pub target_count: CountLaw,
    pub scnr: ScnrLaw<T>,
    /// Target range interval in meters.
    pub range_interval: (T, T),
    /// Target radial velocity interval in m/s.
    pub velocity_interval: (T, T),
    /// When set, target velocities concentrate within this offset of the
    /// clutter ridge velocity (intersected with `velocity_interval`).
    pub embedded_max_offset: Option<T>,
    pub frames_with_targets: u64,
    pub frames_without_targets: u64,
    pub seed: u64,
}

impl<T: Real> Default for DatasetConfig<T> {
    /// Canonical X-band profile: 32 x 63 grid, K-clutter at 15 dB CNR,
    /// 1 to 8 targets uniform in range and velocity, SCNR in [-5, 10] dB.
    fn default() -> Self {
        DatasetConfig {
            radar: RadarParams::default(),
            range_bins: 32,
            velocity_bins: 63,
            clutter: ClutterConfig::Simulated(ClutterSpec::default()),
            target_count: CountLaw::Uniform { lo: 1, hi: 8 },
            scnr: ScnrLaw::Uniform {
                lo: real(-5.0),
                hi: real(10.0),
            },
            range_interval: (real(0.0), real(93.0)),
            velocity_interval: (real(-7.5), real(7.5)),
            embedded_max_offset: None,
            frames_with_targets: 0,
            frames_without_targets: 0,
            seed: 0,
        }
    }
}

impl<T: Real> DatasetConfig<T> {
    pub fn total_records(&self) -> u64 {
        self.frames_with_targets + self.frames_without_targets
    }

    pub fn grid(&self) -> Result<Grid<T>> {
        Grid::new(&self.radar, self.range_bins, self.velocity_bins)
    }

    pub fn validate(&self) -> Result<()> {
        self.radar.validate()?;
        let grid = self.grid()?;
        self.target_count.validate()?;
        self.scnr.validate()?;
        if self.frames_with_targets > 0 && self.target_count.min_count() == 0 {
            return Err(Error::invalid(
                "target frames require a count law with minimum at least 1",
            ));
        }
        for (name, (lo, hi)) in [
            ("range_interval", self.range_interval),
            ("velocity_interval", self.velocity_interval),
        ] {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(Error::invalid(format!("{name} must be a non-degenerate interval")));
            }
        }
        let half_r = grid.delta_r() * real::<T>(0.5);
        let (r0, r1) = grid.range_span();
        if self.range_interval.0 < r0 - half_r || self.range_interval.1 > r1 + half_r {
            return Err(Error::invalid("range_interval exceeds grid label coverage"));
        }
        let half_v = grid.delta_v() * real::<T>(0.5);
        let (v0, v1) = grid.velocity_span();
        if self.velocity_interval.0 < v0 - half_v || self.velocity_interval.1 > v1 + half_v {
            return Err(Error::invalid("velocity_interval exceeds grid label coverage"));
        }
        if let Some(off) = self.embedded_max_offset {
            if !(off > T::zero()) || !off.is_finite() {
                return Err(Error::invalid("embedded offset must be finite and positive"));
            }
            if !matches!(self.clutter, ClutterConfig::Simulated(_)) {
                return Err(Error::invalid(
                    "embedded targets need simulated clutter with a ridge velocity",
                ));
            }
        }
        match &self.clutter {
            ClutterConfig::None => {}
            ClutterConfig::Simulated(spec) => spec.validate()?,
            ClutterConfig::Recorded { cnr_db } => {
                if !cnr_db.is_finite() {
                    return Err(Error::invalid("recorded cnr_db must be finite"));
                }
            }
        }
        Ok(())
    }
}

/// Ground-truth occupancy of one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    /// Binary occupancy per (range bin, velocity bin).
    pub occupancy: Array2<u8>,
    pub range_marginal: Array1<u8>,
    pub doppler_marginal: Array1<u8>,
}

impl LabelSet {
    pub fn empty(range_bins: usize, velocity_bins: usize) -> Self {
        LabelSet {
            occupancy: Array2::zeros((range_bins, velocity_bins)),
            range_marginal: Array1::zeros(range_bins),
            doppler_marginal: Array1::zeros(velocity_bins),
        }
    }

    pub fn num_occupied(&self) -> usize {
        self.occupancy.iter().filter(|&&b| b == 1).count()
    }
}

/// Where a record came from: enough to regenerate it exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    pub master_seed: u64,
    pub record_index: u64,
}

/// One generated (or loaded) dwell with its ground truth.
#[derive(Debug, Clone)]
pub struct FrameRecord<T: Real> {
    pub frame: ComplexFrame<T>,
    pub labels: LabelSet,
    pub targets: Vec<Target<T>>,
    pub provenance: Provenance,
}

impl<T: Real> FrameRecord<T> {
    pub fn has_targets(&self) -> bool {
        !self.targets.is_empty()
    }
}

/// Draws a target set for one frame. Targets carry their SCNR and phase
/// but a zero amplitude; the amplitude law needs the interference energy
/// and is applied during frame composition.
pub fn sample_targets<T: Real, R: Rng + ?Sized>(
    config: &DatasetConfig<T>,
    clutter_velocity: Option<T>,
    rng: &mut R,
) -> Result<Vec<Target<T>>> {
    let count = config.target_count.sample(rng);
    let (v_lo, v_hi) = match config.embedded_max_offset {
        None => config.velocity_interval,
        Some(off) => {
            let vc = clutter_velocity
                .ok_or_else(|| Error::invalid("embedded sampling needs a clutter velocity"))?;
            let lo = (vc - off).max(config.velocity_interval.0);
            let hi = (vc + off).min(config.velocity_interval.1);
            if lo > hi {
                return Err(Error::invalid(
                    "embedded velocity window does not intersect the velocity interval",
                ));
            }
            (lo, hi)
        }
    };
    let (r_lo, r_hi) = config.range_interval;
    let mut targets = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let range = draw_uniform(rng, r_lo.to_f64().unwrap(), r_hi.to_f64().unwrap());
        let velocity = draw_uniform(rng, v_lo.to_f64().unwrap(), v_hi.to_f64().unwrap());
        let scnr_db = config.scnr.sample(rng);
        let phase = draw_uniform(rng, 0.0, std::f64::consts::TAU);
        targets.push(Target {
            range,
            velocity,
            scnr_db,
            phase,
            amplitude: T::zero(),
        });
    }
    Ok(targets)
}

/// Maps targets to their nearest grid cells and forms the marginals.
pub fn build_labels<T: Real>(targets: &[Target<T>], grid: &Grid<T>) -> Result<LabelSet> {
    let mut labels = LabelSet::empty(grid.num_range_bins(), grid.num_velocity_bins());
    for t in targets {
        let m = grid.nearest_range_bin(t.range)?;
        let l = grid.nearest_velocity_bin(t.velocity)?;
        labels.occupancy[(m, l)] = 1;
        labels.range_marginal[m] = 1;
        labels.doppler_marginal[l] = 1;
    }
    Ok(labels)
}

/// Deterministic record factory for one dataset configuration.
#[derive(Debug, Clone)]
pub struct DatasetGenerator<T: Real> {
    config: DatasetConfig<T>,
    grid: Grid<T>,
    source: ClutterSource<T>,
    clutter_velocity: Option<T>,
}

impl<T: Real> DatasetGenerator<T> {
    /// Builds the generator, constructing the clutter source. A
    /// recorded-clutter config must come with its archive.
    pub fn new(config: DatasetConfig<T>, archive: Option<RecordedArchive<T>>) -> Result<Self> {
        config.validate()?;
        let grid = config.grid()?;
        let (source, clutter_velocity) = match &config.clutter {
            ClutterConfig::None => (ClutterSource::None, None),
            ClutterConfig::Simulated(spec) => (
                ClutterSource::Simulated(SimulatedClutter::new(&config.radar, &grid, spec)?),
                Some(spec.velocity),
            ),
            ClutterConfig::Recorded { cnr_db } => {
                let archive = archive.ok_or_else(|| {
                    Error::invalid("recorded-clutter config requires an archive")
                })?;
                (
                    ClutterSource::recorded(&config.radar, &grid, archive, *cnr_db)?,
                    None,
                )
            }
        };
        Ok(DatasetGenerator {
            config,
            grid,
            source,
            clutter_velocity,
        })
    }

    pub fn config(&self) -> &DatasetConfig<T> {
        &self.config
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn total_records(&self) -> u64 {
        self.config.total_records()
    }

    /// Master seed for regeneration epoch `epoch`; epoch 0 is the dataset
    /// itself.
    pub fn epoch_seed(&self, epoch: u64) -> u64 {
        if epoch == 0 {
            self.config.seed
        } else {
            seeds::derive(self.config.seed, epoch)
        }
    }

    fn is_target_record(&self, index: u64) -> bool {
        index < self.config.frames_with_targets
    }

    fn draw_targets<R: Rng + ?Sized>(&self, index: u64, rng: &mut R) -> Result<Vec<Target<T>>> {
        if self.is_target_record(index) {
            sample_targets(&self.config, self.clutter_velocity, rng)
        } else {
            Ok(Vec::new())
        }
    }

    /// Generates record `index` under the dataset's own seed.
    pub fn record(&self, index: u64) -> Result<FrameRecord<T>> {
        self.record_with_master(self.config.seed, index)
    }

    /// Generates record `index` under an explicit master seed (epoch
    /// regeneration reuses record indices with fresh masters).
    pub fn record_with_master(&self, master: u64, index: u64) -> Result<FrameRecord<T>> {
        if index >= self.total_records() {
            return Err(Error::invalid(format!(
                "record index {index} out of range ({} records)",
                self.total_records()
            )));
        }
        let mut rng = seeds::stream_rng(master, index);
        let mut targets = self.draw_targets(index, &mut rng)?;
        let labels = build_labels(&targets, &self.grid)?;
        let clutter = self.source.sample_frame(&self.config.radar, &mut rng);
        let noise = noise_frame(&self.config.radar, &mut rng);
        let interference = self.source.interference_energy(&self.config.radar, &clutter);
        for t in &mut targets {
            t.amplitude = amplitude_for_scnr(&self.config.radar, t.scnr_db, interference)?;
        }
        let frame = compose_frame(&self.config.radar, &targets, &clutter, &noise)?;
        Ok(FrameRecord {
            frame,
            labels,
            targets,
            provenance: Provenance {
                master_seed: master,
                record_index: index,
            },
        })
    }

    /// Labels of record `index` without synthesizing the frame. Replays
    /// only the target prefix of the record's stream.
    pub fn labels_only(&self, master: u64, index: u64) -> Result<LabelSet> {
        if index >= self.total_records() {
            return Err(Error::invalid(format!(
                "record index {index} out of range ({} records)",
                self.total_records()
            )));
        }
        let mut rng = seeds::stream_rng(master, index);
        let targets = self.draw_targets(index, &mut rng)?;
        build_labels(&targets, &self.grid)
    }

    /// Materializes every record, in parallel, in index order.
    pub fn generate_all(&self) -> Result<Vec<FrameRecord<T>>> {
        (0..self.total_records())
            .into_par_iter()
            .map(|i| self.record(i))
            .collect()
    }
}

const DATASET_MAGIC: &[u8; 4] = b"RDDT";
const DATASET_VERSION: u16 = 1;

/// Dataset container header.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetHeader<T: Real> {
    pub radar: RadarParams<T>,
    pub range_bins: usize,
    pub velocity_bins: usize,
    pub frames_with_targets: u64,
    pub frames_without_targets: u64,
    pub seed: u64,
}

impl<T: Real> DatasetHeader<T> {
    pub fn for_config(config: &DatasetConfig<T>) -> Self {
        DatasetHeader {
            radar: config.radar.clone(),
            range_bins: config.range_bins,
            velocity_bins: config.velocity_bins,
            frames_with_targets: config.frames_with_targets,
            frames_without_targets: config.frames_without_targets,
            seed: config.seed,
        }
    }

    pub fn total_records(&self) -> u64 {
        self.frames_with_targets + self.frames_without_targets
    }

    pub fn grid(&self) -> Result<Grid<T>> {
        Grid::new(&self.radar, self.range_bins, self.velocity_bins)
    }
}

/// Streaming dataset writer. Records must arrive in index order and the
/// declared counts must be met before `finish`.
pub struct DatasetWriter<T: Real, W: Write> {
    sink: SectionWriter<W>,
    header: DatasetHeader<T>,
    written: u64,
}

impl<T: Real, W: Write> DatasetWriter<T, W> {
    pub fn new(writer: W, header: DatasetHeader<T>) -> Result<Self> {
        header.radar.validate()?;
        let mut sink = SectionWriter::new(writer);
        sink.write_magic(DATASET_MAGIC)?;
        sink.write_u16(DATASET_VERSION)?;
        sink.write_u32(header.radar.n() as u32)?;
        sink.write_u32(header.radar.k() as u32)?;
        sink.write_u32(header.range_bins as u32)?;
        sink.write_u32(header.velocity_bins as u32)?;
        for v in [
            header.radar.bandwidth,
            header.radar.pri,
            header.radar.carrier,
            header.radar.noise_power,
            header.radar.range_resolution(),
            header.radar.velocity_resolution(),
        ] {
            sink.write_f64(v.to_f64().expect("finite"))?;
        }
        sink.write_u64(header.frames_with_targets)?;
        sink.write_u64(header.frames_without_targets)?;
        sink.write_u64(header.seed)?;
        Ok(DatasetWriter {
            sink,
            header,
            written: 0,
        })
    }

    pub fn write_record(&mut self, record: &FrameRecord<T>) -> Result<()> {
        if self.written == self.header.total_records() {
            return Err(Error::invalid("more records than the header declares"));
        }
        let (n, k) = record.frame.dim();
        if n != self.header.radar.n() || k != self.header.radar.k() {
            return Err(Error::shape(format!(
                "record frame {:?} does not match header dwell {}x{}",
                record.frame.dim(),
                self.header.radar.n(),
                self.header.radar.k()
            )));
        }
        for z in record.frame.iter() {
            self.sink.write_f32(z.re.to_f64().expect("finite") as f32)?;
            self.sink.write_f32(z.im.to_f64().expect("finite") as f32)?;
        }
        let dims = (self.header.range_bins, self.header.velocity_bins);
        if record.labels.occupancy.dim() != dims {
            return Err(Error::shape("record labels do not match header grid"));
        }
        for &b in record.labels.occupancy.iter() {
            self.sink.write_u8(b)?;
        }
        for &b in record.labels.range_marginal.iter() {
            self.sink.write_u8(b)?;
        }
        for &b in record.labels.doppler_marginal.iter() {
            self.sink.write_u8(b)?;
        }
        self.sink.write_u32(record.targets.len() as u32)?;
        for t in &record.targets {
            for v in [t.range, t.velocity, t.scnr_db, t.phase] {
                self.sink.write_f64(v.to_f64().expect("finite"))?;
            }
        }
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        if self.written != self.header.total_records() {
            return Err(Error::invalid(format!(
                "header declares {} records, {} were written",
                self.header.total_records(),
                self.written
            )));
        }
        self.sink.flush()?;
        Ok(self.sink.into_inner())
    }
}

/// Streaming dataset reader.
pub struct DatasetReader<T: Real, R: Read> {
    source: SectionReader<R>,
    header: DatasetHeader<T>,
    next_index: u64,
}

impl<T: Real, R: Read> DatasetReader<T, R> {
    pub fn open(reader: R) -> Result<Self> {
        let mut source = SectionReader::new(reader);
        source.enter("dataset header");
        source.expect_magic(DATASET_MAGIC)?;
        let version = source.read_u16()?;
        if version != DATASET_VERSION {
            return Err(source.format_error(format!("unsupported dataset version {version}")));
        }
        let n = source.read_u32()? as usize;
        let k = source.read_u32()? as usize;
        let range_bins = source.read_u32()? as usize;
        let velocity_bins = source.read_u32()? as usize;
        let bandwidth = source.read_f64()?;
        let pri = source.read_f64()?;
        let carrier = source.read_f64()?;
        let noise_power = source.read_f64()?;
        let delta_r = source.read_f64()?;
        let delta_v = source.read_f64()?;
        let frames_with_targets = source.read_u64()?;
        let frames_without_targets = source.read_u64()?;
        let seed = source.read_u64()?;
        if n == 0 || k == 0 || range_bins == 0 || velocity_bins == 0 {
            return Err(source.format_error("degenerate dwell or grid dimensions"));
        }
        // The propagation speed is not stored directly; the range
        // resolution pins it down.
        let speed = 2.0 * bandwidth * delta_r;
        let radar = RadarParams::<T> {
            samples_per_chirp: n,
            chirps_per_dwell: k,
            bandwidth: real(bandwidth),
            pri: real(pri),
            carrier: real(carrier),
            noise_power: real(noise_power),
            propagation_speed: real(speed),
        };
        radar
            .validate()
            .map_err(|e| source.format_error(format!("inconsistent header: {e}")))?;
        let implied_dv = radar.velocity_resolution().to_f64().expect("finite");
        if (implied_dv - delta_v).abs() > 1e-9 * delta_v.abs().max(1.0) {
            return Err(source.format_error(format!(
                "velocity resolution {delta_v} disagrees with waveform-implied {implied_dv}"
            )));
        }
        Ok(DatasetReader {
            source,
            header: DatasetHeader {
                radar,
                range_bins,
                velocity_bins,
                frames_with_targets,
                frames_without_targets,
                seed,
            },
            next_index: 0,
        })
    }

    pub fn header(&self) -> &DatasetHeader<T> {
        &self.header
    }

    /// Reads the next record; `None` once the declared count is consumed.
    /// Targets come back with zero amplitudes (amplitudes are derived at
    /// generation time and not serialized).
    pub fn next_record(&mut self) -> Result<Option<FrameRecord<T>>> {
        if self.next_index == self.header.total_records() {
            return Ok(None);
        }
        let n = self.header.radar.n();
        let k = self.header.radar.k();
        self.source.enter("record samples");
        let raw = self.source.read_f32_vec(2 * n * k)?;
        let mut frame = Array2::zeros((n, k));
        for (idx, chunk) in raw.chunks_exact(2).enumerate() {
            frame[(idx / k, idx % k)] =
                Complex::new(real::<T>(chunk[0] as f64), real::<T>(chunk[1] as f64));
        }
        self.source.enter("record labels");
        let cells = self.header.range_bins * self.header.velocity_bins;
        let occupancy_bytes = self.source.read_bytes(cells)?;
        let range_bytes = self.source.read_bytes(self.header.range_bins)?;
        let doppler_bytes = self.source.read_bytes(self.header.velocity_bins)?;
        for &b in occupancy_bytes
            .iter()
            .chain(range_bytes.iter())
            .chain(doppler_bytes.iter())
        {
            if b > 1 {
                return Err(self.source.format_error(format!("non-binary label byte {b}")));
            }
        }
        let labels = LabelSet {
            occupancy: Array2::from_shape_vec(
                (self.header.range_bins, self.header.velocity_bins),
                occupancy_bytes,
            )
            .expect("sized above"),
            range_marginal: Array1::from_vec(range_bytes),
            doppler_marginal: Array1::from_vec(doppler_bytes),
        };
        self.source.enter("record targets");
        let count = self.source.read_u32()?;
        let mut targets = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let range = self.source.read_f64()?;
            let velocity = self.source.read_f64()?;
            let scnr_db = self.source.read_f64()?;
            let phase = self.source.read_f64()?;
            targets.push(Target {
                range: real::<T>(range),
                velocity: real::<T>(velocity),
                scnr_db: real::<T>(scnr_db),
                phase: real::<T>(phase),
                amplitude: T::zero(),
            });
        }
        let index = self.next_index;
        self.next_index += 1;
        Ok(Some(FrameRecord {
            frame,
            labels,
            targets,
            provenance: Provenance {
                master_seed: self.header.seed,
                record_index: index,
            },
        }))
    }

    /// Reads all remaining records.
    pub fn read_all(&mut self) -> Result<Vec<FrameRecord<T>>> {
        let mut out = Vec::new();
        while let Some(r) = self.next_record()? {
            out.push(r);
        }
        Ok(out)
    }
}

/// Generates and writes a whole dataset to `path`.
pub fn write_dataset_file<T: Real>(path: &Path, generator: &DatasetGenerator<T>) -> Result<()> {
    let file = File::create(path)?;
    let header = DatasetHeader::for_config(generator.config());
    let mut writer = DatasetWriter::new(BufWriter::new(file), header)?;
    for i in 0..generator.total_records() {
        writer.write_record(&generator.record(i)?)?;
    }
    writer.finish()?.flush()?;
    Ok(())
}

/// Opens a dataset file for streaming reads.
pub fn open_dataset_file<T: Real>(path: &Path) -> Result<DatasetReader<T, BufReader<File>>> {
    DatasetReader::open(BufReader::new(File::open(path)?))
}
