//! Self-contained dense-network engine for the marginal detectors.
//!
//! The architecture alternates two fully connected sub-transforms per
//! block: one applied to every row of the input matrix, one applied to
//! every column of the result. Three such blocks shrink a dwell-sized
//! real matrix to a small feature map that a final affine layer turns
//! into per-bin occupancy probabilities.
//!
//! Everything needed to train is hand-rolled and seed-deterministic:
//! reverse-mode gradients, class-balanced cross-entropy, Adam, a plateau
//! learning-rate scheduler, and a binary checkpoint container.

pub mod adam;
pub mod checkpoint;
pub mod dafc;
pub mod loss;
pub mod net;
pub mod scheduler;
pub mod train;

pub use adam::AdamState;
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint};
pub use dafc::{Activation, DafcGrads, DafcParams};
pub use loss::{class_balanced_loss, class_weights, per_class_bce, ClassWeights};
pub use net::{GradientSet, NetworkArch, NetworkParams};
pub use scheduler::PlateauScheduler;
pub use train::{EpochStats, TrainConfig, TrainData, Trainer};
