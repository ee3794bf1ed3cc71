//! The training pipeline: corpus selection, augmentation, the epoch loop,
//! checkpoint selection by validation PLCC, and the cross-domain experiment
//! matrix.
//!
//! Everything here is deterministic given a [`TrainConfig`] and its seed.
//! Randomness is drawn from named streams derived via [`crate::seeding`], so
//! the shuffle order, augmentation draws, dropout masks and weight init of a
//! run never interfere with each other and replay exactly.

mod config;
mod run;
mod store;
mod transforms;

pub use config::{TrainConfig, TrainCorpus, DEFAULT_SEED};
pub use run::{
    evaluate, run_experiment_matrix, train, EpochStats, EvalFailure, EvalOutcome, MatrixOutcome,
    TrainHistory,
};
pub use store::ImageStore;
pub use transforms::{eval_transform, train_transform};

use std::path::PathBuf;

use thiserror::Error;

use crate::datasets::DatasetError;
use crate::imagecore::ImageError;
use crate::metrics::MetricError;
use crate::model::{ModelError, FEATURE_DIM};

/// Layer widths of the quality regressor, input dimension first.
pub const MODEL_WIDTHS: [usize; 4] = [FEATURE_DIM, 64, 16, 1];

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("source image {id} ({path}): {message}")]
    Source {
        id: String,
        path: PathBuf,
        message: String,
    },
    #[error("no dataset named {name} in the provided records")]
    UnknownDataset { name: String },
    #[error("record {id} carries no quality score")]
    MissingScore { id: String },
    #[error("training partition is empty for repetition {repetition}")]
    EmptyTrainSet { repetition: u32 },
    #[error("validation partition is empty for repetition {repetition}")]
    EmptyValidation { repetition: u32 },
    #[error("validation scoring is degenerate: {reason}")]
    DegenerateValidation { reason: String },
    #[error("split plan failed its leakage audit: {count} violation(s), first: {first}")]
    LeakyPlan { count: usize, first: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}
