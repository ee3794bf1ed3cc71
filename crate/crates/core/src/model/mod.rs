//! The learned quality regressor.
//!
//! [`features`] turns an image into a fixed descriptor, [`mlp`] maps the
//! (standardized) descriptor to a scalar score, [`loss`] weights the squared
//! error by inverse level frequency, [`optim`] advances the parameters, and
//! [`checkpoint`] persists the whole assembly.

pub mod checkpoint;
pub mod features;
pub mod loss;
pub mod mlp;
pub mod optim;

pub use checkpoint::{CheckpointError, FeatureScaler, ModelCheckpoint, CHECKPOINT_VERSION};
pub use features::{extract_features, FeatureVector, FEATURE_DIM, FEATURE_TAG, MIN_SIDE};
pub use loss::{class_weights, quality_level, weighted_mse_loss, NUM_QUALITY_LEVELS};
pub use mlp::{Gradients, Layer, MlpRegressor, TrainTrace, DROPOUT_RATE};
pub use optim::{onecycle_lr, AdamWConfig, AdamWState, MAX_LR, WEIGHT_DECAY};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("image {width}x{height} is below the 32x32 feature minimum")]
    ImageTooSmall { width: u32, height: u32 },
    #[error("input has {got} dimensions, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("input lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("operation needs a non-empty corpus")]
    EmptyCorpus,
    #[error("schedule step {step} outside 0..{total}")]
    StepOutOfRange { step: u64, total: u64 },
}
