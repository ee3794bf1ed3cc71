//! Training run configuration.

use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::model::{MAX_LR, MIN_SIDE, WEIGHT_DECAY};

/// Seed used when the caller does not pick one.
pub const DEFAULT_SEED: u64 = 7919;

/// Which harmonized datasets feed the training partition.
///
/// Serializes as the string `"all"`, a single dataset name, or a list of
/// names; `"all"` is therefore reserved and cannot be used as a dataset name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "CorpusRepr", into = "CorpusRepr")]
pub enum TrainCorpus {
    /// Every dataset present in the records whose split gives it a training
    /// partition.
    All,
    /// An explicit list of dataset names.
    Named(Vec<String>),
}

impl TrainCorpus {
    /// Stable label used in RNG stream names and report rows.
    pub fn label(&self) -> String {
        match self {
            TrainCorpus::All => "all".to_string(),
            TrainCorpus::Named(names) => names.join("+"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CorpusRepr {
    One(String),
    Many(Vec<String>),
}

impl From<CorpusRepr> for TrainCorpus {
    fn from(repr: CorpusRepr) -> Self {
        match repr {
            CorpusRepr::One(name) if name == "all" => TrainCorpus::All,
            CorpusRepr::One(name) => TrainCorpus::Named(vec![name]),
            CorpusRepr::Many(names) => TrainCorpus::Named(names),
        }
    }
}

impl From<TrainCorpus> for CorpusRepr {
    fn from(corpus: TrainCorpus) -> Self {
        match corpus {
            TrainCorpus::All => CorpusRepr::One("all".to_string()),
            TrainCorpus::Named(names) => CorpusRepr::Many(names),
        }
    }
}

/// Hyperparameters and bookkeeping for one training run.
///
/// The network architecture itself is fixed ([`super::MODEL_WIDTHS`]); what
/// varies per run is the corpus, the split repetition, the input resolution
/// and the optimization budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: u32,
    pub batch_size: usize,
    /// Side length of the square network input crop.
    pub input_size: u32,
    /// Training resize overshoot: the shorter side is first brought to
    /// `round((1 + oversize_fraction) * input_size)` so the random crop has
    /// headroom to translate.
    pub oversize_fraction: f64,
    pub max_lr: f64,
    pub weight_decay: f64,
    pub seed: u64,
    pub train_corpus: TrainCorpus,
    /// Which repetition of the split plan this run trains against.
    pub split_repetition: u32,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 32,
            input_size: 224,
            oversize_fraction: 0.125,
            max_lr: MAX_LR,
            weight_decay: WEIGHT_DECAY,
            seed: DEFAULT_SEED,
            train_corpus: TrainCorpus::All,
            split_repetition: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let fail = |msg: String| Err(TrainError::InvalidConfig(msg));
        if self.epochs == 0 {
            return fail("epochs must be at least 1".into());
        }
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1".into());
        }
        if self.input_size < MIN_SIDE {
            return fail(format!(
                "input_size {} is below the feature extractor minimum {}",
                self.input_size, MIN_SIDE
            ));
        }
        if !self.oversize_fraction.is_finite() || self.oversize_fraction < 0.0 {
            return fail(format!(
                "oversize_fraction must be finite and non-negative, got {}",
                self.oversize_fraction
            ));
        }
        if !self.max_lr.is_finite() || self.max_lr <= 0.0 {
            return fail(format!("max_lr must be positive, got {}", self.max_lr));
        }
        if !self.weight_decay.is_finite() || self.weight_decay < 0.0 {
            return fail(format!(
                "weight_decay must be non-negative, got {}",
                self.weight_decay
            ));
        }
        if let TrainCorpus::Named(names) = &self.train_corpus {
            if names.is_empty() {
                return fail("train_corpus names an empty dataset list".into());
            }
            for (i, name) in names.iter().enumerate() {
                if name.is_empty() || name == "all" {
                    return fail(format!("train_corpus entry {i} is reserved or empty"));
                }
                if names[..i].contains(name) {
                    return fail(format!("train_corpus lists {name} twice"));
                }
            }
        }
        Ok(())
    }
}
