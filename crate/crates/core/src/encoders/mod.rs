//! Item-memory (classic) and learned binary encoders.

pub mod item_memory;
pub mod learned;
pub mod train;

pub use item_memory::{build_item_memory, encode_classic, ItemMemory};
pub use learned::{encode_learned, fold_batchnorm, BatchNormState, DenseBinaryLayer, LearnedEncoder, OpCounter};
pub use train::{
    calibrate_batch_norm, fit_to_targets, train_encoder, train_encoder_with_progress, EpochStats, LrSchedule, Objective,
    SteMode, TrainConfig,
};
