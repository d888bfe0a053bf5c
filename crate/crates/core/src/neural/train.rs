//! Mini-batch training of one marginal network.
//!
//! Data comes either from a fixed record slice or straight from a dataset
//! generator, in which case every epoch synthesizes fresh frames under an
//! epoch-derived seed. Class weights are recomputed per epoch from the
//! label stream actually trained on. All updates are sequential and
//! seed-deterministic; shuffling, initialization and frame synthesis each
//! draw from their own derived streams.

use std::borrow::Cow;

use ndarray::Array1;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::{AdamConfig, AdamState};
use super::loss::{
    bce_sums, class_balanced_loss, class_weights, loss_gradient_logits, ClassWeights,
};
use super::net::{GradientSet, NetworkArch, NetworkParams};
use super::scheduler::PlateauScheduler;
use crate::dataset::{DatasetGenerator, FrameRecord, LabelSet};
use crate::error::{Error, Result};
use crate::rdmap::{preprocess, DetectionAxis, PreprocessMode};
use crate::scalar::{real, Real};
use crate::seeds;

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Weight-decay factor on the weight matrices.
    pub l2_factor: f64,
    /// Effective-number beta of the class-balanced loss.
    pub loss_beta: f64,
    pub batch_size: usize,
    pub epochs: u32,
    pub scheduler_factor: f64,
    pub scheduler_patience: u32,
    pub scheduler_min_delta: f64,
    /// Seed of the training run: parameter initialization and epoch
    /// shuffling derive from it.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            l2_factor: 5e-4,
            loss_beta: 0.99,
            batch_size: 256,
            epochs: 300,
            scheduler_factor: 0.905,
            scheduler_patience: 10,
            scheduler_min_delta: 1e-4,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::invalid("learning_rate must be finite and non-negative"));
        }
        for (name, b) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::invalid(format!("{name} must lie in [0, 1)")));
            }
        }
        if !(self.adam_eps > 0.0) {
            return Err(Error::invalid("adam_eps must be positive"));
        }
        if !(self.l2_factor >= 0.0) || !self.l2_factor.is_finite() {
            return Err(Error::invalid("l2_factor must be finite and non-negative"));
        }
        if !(0.0 < self.loss_beta && self.loss_beta < 1.0) {
            return Err(Error::invalid("loss_beta must lie in (0, 1)"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        if !(0.0 < self.scheduler_factor && self.scheduler_factor <= 1.0) {
            return Err(Error::invalid("scheduler_factor must lie in (0, 1]"));
        }
        if self.scheduler_patience == 0 {
            return Err(Error::invalid("scheduler_patience must be at least 1"));
        }
        if !(self.scheduler_min_delta >= 0.0) {
            return Err(Error::invalid("scheduler_min_delta must be non-negative"));
        }
        Ok(())
    }
}

/// Source of training records.
#[derive(Clone, Copy)]
pub enum TrainData<'a, T: Real> {
    /// Regenerate every epoch from the generator under an epoch seed.
    OnTheFly(&'a DatasetGenerator<T>),
    /// Fixed records, shuffled per epoch.
    InMemory(&'a [FrameRecord<T>]),
}

impl<'a, T: Real> TrainData<'a, T> {
    fn len(&self) -> u64 {
        match self {
            TrainData::OnTheFly(g) => g.total_records(),
            TrainData::InMemory(records) => records.len() as u64,
        }
    }

    fn labels(&self, master: u64, index: u64) -> Result<Cow<'a, LabelSet>> {
        match self {
            TrainData::OnTheFly(g) => Ok(Cow::Owned(g.labels_only(master, index)?)),
            TrainData::InMemory(records) => Ok(Cow::Borrowed(&records[index as usize].labels)),
        }
    }

    fn fetch(&self, master: u64, index: u64) -> Result<Cow<'a, FrameRecord<T>>> {
        match self {
            TrainData::OnTheFly(g) => Ok(Cow::Owned(g.record_with_master(master, index)?)),
            TrainData::InMemory(records) => Ok(Cow::Borrowed(&records[index as usize])),
        }
    }
}

fn marginal(labels: &LabelSet, axis: DetectionAxis) -> &Array1<u8> {
    match axis {
        DetectionAxis::Range => &labels.range_marginal,
        DetectionAxis::Doppler => &labels.doppler_marginal,
    }
}

/// One row of the training history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    /// 1-based epoch number.
    pub epoch: u32,
    /// Rate in effect during the epoch (before any plateau cut it causes).
    pub learning_rate: f64,
    /// Mean batch objective: class-weighted BCE plus the L2 penalty.
    pub train_loss: f64,
    /// Unweighted BCE over occupied bins (`None` if the epoch saw none).
    pub train_occupied_bce: Option<f64>,
    /// Unweighted BCE over empty bins.
    pub train_empty_bce: Option<f64>,
    /// Class-weighted BCE on the validation set (no L2 term), weighted by
    /// the validation set's own label counts.
    pub val_loss: Option<f64>,
    pub val_occupied_bce: Option<f64>,
    pub val_empty_bce: Option<f64>,
}

/// Training driver owning the network and optimizer state.
pub struct Trainer<T: Real> {
    config: TrainConfig,
    mode: PreprocessMode,
    network: NetworkParams<T>,
    adam: AdamState<T>,
    scheduler: PlateauScheduler,
    epochs_done: u32,
    history: Vec<EpochStats>,
}

impl<T: Real> Trainer<T> {
    /// Fresh trainer with seed-derived initialization (stream 0 of the
    /// config seed).
    pub fn new(config: TrainConfig, mode: PreprocessMode, arch: NetworkArch) -> Result<Self> {
        config.validate()?;
        let network = NetworkParams::init(arch, &mut seeds::stream_rng(config.seed, 0));
        Ok(Trainer::with_network(config, mode, network))
    }

    /// Trainer around an existing network with fresh optimizer state.
    pub fn with_network(config: TrainConfig, mode: PreprocessMode, network: NetworkParams<T>) -> Self {
        let adam = AdamState::new(&network);
        let scheduler = PlateauScheduler::new(
            config.learning_rate,
            config.scheduler_factor,
            config.scheduler_patience,
            config.scheduler_min_delta,
        );
        Trainer {
            config,
            mode,
            network,
            adam,
            scheduler,
            epochs_done: 0,
            history: Vec::new(),
        }
    }

    /// Reassembles a trainer from persisted state.
    pub fn restore(
        config: TrainConfig,
        mode: PreprocessMode,
        network: NetworkParams<T>,
        adam: AdamState<T>,
        scheduler: PlateauScheduler,
        epochs_done: u32,
    ) -> Self {
        Trainer {
            config,
            mode,
            network,
            adam,
            scheduler,
            epochs_done,
            history: Vec::new(),
        }
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn mode(&self) -> PreprocessMode {
        self.mode
    }

    pub fn network(&self) -> &NetworkParams<T> {
        &self.network
    }

    pub fn into_network(self) -> NetworkParams<T> {
        self.network
    }

    pub fn adam(&self) -> &AdamState<T> {
        &self.adam
    }

    pub fn scheduler(&self) -> &PlateauScheduler {
        &self.scheduler
    }

    pub fn epochs_done(&self) -> u32 {
        self.epochs_done
    }

    pub fn history(&self) -> &[EpochStats] {
        &self.history
    }

    /// Runs epochs until the configured count is reached.
    pub fn train(
        &mut self,
        data: TrainData<'_, T>,
        validation: Option<&[FrameRecord<T>]>,
    ) -> Result<()> {
        let remaining = self.config.epochs.saturating_sub(self.epochs_done);
        self.train_epochs(data, validation, remaining)
    }

    /// Runs exactly `count` additional epochs.
    pub fn train_epochs(
        &mut self,
        data: TrainData<'_, T>,
        validation: Option<&[FrameRecord<T>]>,
        count: u32,
    ) -> Result<()> {
        if data.len() == 0 {
            return Err(Error::invalid("training data source is empty"));
        }
        for _ in 0..count {
            let stats = self.run_epoch(data, validation)?;
            self.history.push(stats);
        }
        Ok(())
    }

    fn run_epoch(
        &mut self,
        data: TrainData<'_, T>,
        validation: Option<&[FrameRecord<T>]>,
    ) -> Result<EpochStats> {
        let epoch_index = self.epochs_done;
        let total = data.len();
        // Epoch 0 of on-the-fly training already uses a derived seed so the
        // dataset's own materialization (epoch tag 0) is never trained on.
        let master = match data {
            TrainData::OnTheFly(g) => g.epoch_seed(epoch_index as u64 + 1),
            TrainData::InMemory(_) => 0,
        };

        // Label pre-pass over the epoch stream for the class weights.
        let mut n0 = 0u64;
        let mut n1 = 0u64;
        for i in 0..total {
            let labels = data.labels(master, i)?;
            let y = marginal(&labels, self.mode.axis);
            if y.len() != self.network.output_dim() {
                return Err(Error::shape(format!(
                    "network emits {} bins, labels have {}",
                    self.network.output_dim(),
                    y.len()
                )));
            }
            let ones = y.iter().filter(|&&b| b == 1).count() as u64;
            n1 += ones;
            n0 += y.len() as u64 - ones;
        }
        let weights: ClassWeights<T> = class_weights(self.config.loss_beta, n0.max(1), n1.max(1))?;

        let mut order: Vec<u64> = (0..total).collect();
        order.shuffle(&mut seeds::stream_rng(self.config.seed, 1 + epoch_index as u64));

        let lr = self.scheduler.learning_rate();
        let adam_config = self.config.adam();
        let l2 = real::<T>(self.config.l2_factor);
        let mut loss_acc = 0.0f64;
        let mut batches = 0u64;
        let mut occ_sum = 0.0f64;
        let mut occ_count = 0usize;
        let mut empty_sum = 0.0f64;
        let mut empty_count = 0usize;

        for chunk in order.chunks(self.config.batch_size) {
            let mut grads = GradientSet::zeros_like(&self.network);
            let mut batch_data_loss = T::zero();
            for &idx in chunk {
                let record = data.fetch(master, idx)?;
                let z0 = preprocess(&record.frame, self.mode);
                let cache = self.network.forward_cached(&z0)?;
                let y_true = marginal(&record.labels, self.mode.axis);
                batch_data_loss += class_balanced_loss(&cache.outputs, y_true, weights);
                let ((os, oc), (es, ec)) = bce_sums(&cache.outputs, y_true);
                occ_sum += os.to_f64().expect("finite");
                occ_count += oc;
                empty_sum += es.to_f64().expect("finite");
                empty_count += ec;
                let d_logits = loss_gradient_logits(&cache.outputs, y_true, weights);
                let sample = self.network.backward_from_logits(&z0, &cache, &d_logits);
                grads.add_assign(&sample);
            }
            let inv = real::<T>(chunk.len() as f64).recip();
            grads.scale(inv);
            grads.add_weight_decay(&self.network, l2);
            let batch_loss = batch_data_loss.to_f64().expect("finite") / chunk.len() as f64
                + self.config.l2_factor * self.network.weight_norm_sq().to_f64().expect("finite");
            self.adam.step(&mut self.network, &grads, lr, adam_config);
            loss_acc += batch_loss;
            batches += 1;
        }

        let train_loss = loss_acc / batches as f64;
        self.scheduler.observe(train_loss);
        self.epochs_done += 1;

        let mut stats = EpochStats {
            epoch: self.epochs_done,
            learning_rate: lr,
            train_loss,
            train_occupied_bce: (occ_count > 0).then(|| occ_sum / occ_count as f64),
            train_empty_bce: (empty_count > 0).then(|| empty_sum / empty_count as f64),
            val_loss: None,
            val_occupied_bce: None,
            val_empty_bce: None,
        };
        if let Some(records) = validation {
            let (loss, occ, empty) = self.evaluate(records)?;
            stats.val_loss = Some(loss);
            stats.val_occupied_bce = occ;
            stats.val_empty_bce = empty;
        }
        Ok(stats)
    }

    /// Forward-only evaluation: class-weighted mean loss (weights from
    /// this set's own label counts) plus per-class BCE.
    pub fn evaluate(
        &self,
        records: &[FrameRecord<T>],
    ) -> Result<(f64, Option<f64>, Option<f64>)> {
        evaluate_records(
            &self.network,
            self.mode,
            records,
            self.config.loss_beta,
        )
    }
}

/// Shared forward-only evaluation used for validation tracking.
pub fn evaluate_records<T: Real>(
    network: &NetworkParams<T>,
    mode: PreprocessMode,
    records: &[FrameRecord<T>],
    loss_beta: f64,
) -> Result<(f64, Option<f64>, Option<f64>)> {
    if records.is_empty() {
        return Err(Error::invalid("evaluation set is empty"));
    }
    let mut n0 = 0u64;
    let mut n1 = 0u64;
    for r in records {
        let y = marginal(&r.labels, mode.axis);
        let ones = y.iter().filter(|&&b| b == 1).count() as u64;
        n1 += ones;
        n0 += y.len() as u64 - ones;
    }
    let weights: ClassWeights<T> = class_weights(loss_beta, n0.max(1), n1.max(1))?;
    let mut loss = 0.0f64;
    let mut occ = (0.0f64, 0usize);
    let mut empty = (0.0f64, 0usize);
    for r in records {
        let z0 = preprocess(&r.frame, mode);
        let y = network.forward(&z0)?;
        let y_true = marginal(&r.labels, mode.axis);
        loss += class_balanced_loss(&y, y_true, weights)
            .to_f64()
            .expect("finite");
        let ((os, oc), (es, ec)) = bce_sums(&y, y_true);
        occ.0 += os.to_f64().expect("finite");
        occ.1 += oc;
        empty.0 += es.to_f64().expect("finite");
        empty.1 += ec;
    }
    Ok((
        loss / records.len() as f64,
        (occ.1 > 0).then(|| occ.0 / occ.1 as f64),
        (empty.1 > 0).then(|| empty.0 / empty.1 as f64),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ClutterConfig, CountLaw, DatasetConfig, ScnrLaw};
    use crate::radar::RadarParams;

    fn tiny_dataset_config(with: u64, without: u64, seed: u64) -> DatasetConfig<f64> {
        DatasetConfig {
            radar: RadarParams {
                samples_per_chirp: 8,
                chirps_per_dwell: 8,
                ..RadarParams::default()
            },
            range_bins: 4,
            velocity_bins: 5,
            clutter: ClutterConfig::None,
            target_count: CountLaw::Fixed { count: 1 },
            scnr: ScnrLaw::Fixed { db: 15.0 },
            range_interval: (0.0, 9.0),
            velocity_interval: (-0.4, 0.4),
            embedded_max_offset: None,
            frames_with_targets: with,
            frames_without_targets: without,
            seed,
        }
    }

    fn tiny_arch() -> NetworkArch {
        // Doppler mode on an 8x8 dwell: input 8x16, 5 output bins.
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

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let generator = DatasetGenerator::new(tiny_dataset_config(8, 8, 3), None).unwrap();
        let config = TrainConfig {
            learning_rate: 0.0,
            ..tiny_config(1)
        };
        let mut trainer = Trainer::<f64>::new(config, PreprocessMode::doppler(), tiny_arch()).unwrap();
        let before = trainer.network().clone();
        trainer
            .train(TrainData::OnTheFly(&generator), None)
            .unwrap();
        assert_eq!(*trainer.network(), before);
        assert_eq!(trainer.history().len(), 1);
        assert!(trainer.history()[0].train_loss.is_finite());
        assert!(trainer.history()[0].train_occupied_bce.is_some());
        assert!(trainer.history()[0].train_empty_bce.is_some());
    }

    #[test]
    fn smoke_training_halves_the_loss() {
        let generator = DatasetGenerator::new(tiny_dataset_config(32, 32, 5), None).unwrap();
        let records = generator.generate_all().unwrap();
        let mut trainer =
            Trainer::<f64>::new(tiny_config(50), PreprocessMode::doppler(), tiny_arch()).unwrap();
        trainer
            .train(TrainData::InMemory(&records), None)
            .unwrap();
        let first = trainer.history().first().unwrap().train_loss;
        let last = trainer.history().last().unwrap().train_loss;
        assert!(
            last <= 0.5 * first,
            "loss went from {first} to {last}, expected at least a halving"
        );
    }

    #[test]
    fn histories_are_seed_deterministic() {
        let generator = DatasetGenerator::new(tiny_dataset_config(8, 8, 7), None).unwrap();
        let run = || {
            let mut trainer =
                Trainer::<f64>::new(tiny_config(3), PreprocessMode::doppler(), tiny_arch())
                    .unwrap();
            trainer
                .train(TrainData::OnTheFly(&generator), None)
                .unwrap();
            (trainer.history().to_vec(), trainer.into_network())
        };
        let (h1, n1) = run();
        let (h2, n2) = run();
        assert_eq!(h1, h2);
        assert_eq!(n1, n2);
    }

    #[test]
    fn on_the_fly_epochs_see_different_data() {
        let generator = DatasetGenerator::new(tiny_dataset_config(8, 8, 9), None).unwrap();
        let e1 = generator.epoch_seed(1);
        let e2 = generator.epoch_seed(2);
        let a = generator.record_with_master(e1, 0).unwrap();
        let b = generator.record_with_master(e2, 0).unwrap();
        assert_ne!(a.frame, b.frame);
    }

    #[test]
    fn empty_source_is_rejected() {
        let generator = DatasetGenerator::new(tiny_dataset_config(0, 0, 9), None).unwrap();
        let mut trainer =
            Trainer::<f64>::new(tiny_config(1), PreprocessMode::doppler(), tiny_arch()).unwrap();
        assert!(trainer
            .train(TrainData::OnTheFly(&generator), None)
            .is_err());
    }

    #[test]
    fn wrong_marginal_length_is_a_shape_error() {
        let generator = DatasetGenerator::new(tiny_dataset_config(4, 4, 9), None).unwrap();
        let mut trainer =
            Trainer::<f64>::new(tiny_config(1), PreprocessMode::range(), tiny_arch()).unwrap();
        // Range marginal has 4 bins, the network emits 5.
        let err = trainer
            .train(TrainData::OnTheFly(&generator), None)
            .unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
    }

    #[test]
    fn validation_metrics_are_recorded() {
        let generator = DatasetGenerator::new(tiny_dataset_config(8, 8, 11), None).unwrap();
        let val = generator.generate_all().unwrap();
        let mut trainer =
            Trainer::<f64>::new(tiny_config(2), PreprocessMode::doppler(), tiny_arch()).unwrap();
        trainer
            .train(TrainData::OnTheFly(&generator), Some(&val))
            .unwrap();
        for stats in trainer.history() {
            assert!(stats.val_loss.unwrap().is_finite());
            assert!(stats.val_occupied_bce.is_some());
            assert!(stats.val_empty_bce.is_some());
        }
    }

    #[test]
    fn lr_zero_config_is_valid_but_negative_is_not() {
        let mut config = tiny_config(1);
        config.learning_rate = 0.0;
        assert!(config.validate().is_ok());
        config.learning_rate = -1.0;
        assert!(config.validate().is_err());
        let mut config = tiny_config(1);
        config.loss_beta = 1.0;
        assert!(config.validate().is_err());
        let mut config = tiny_config(1);
        config.batch_size = 0;
        assert!(config.validate().is_err());
    }
}
