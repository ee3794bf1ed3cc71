//! Command failures carrying the process exit code.
//!
//! Exit codes: 1 for invalid inputs or configuration, 2 for filesystem and
//! decoding problems, 3 for internal errors that indicate a bug rather than
//! bad input.

use iqa_core::datasets::DatasetError;
use iqa_core::distort::{DistortError, GenerateError, LadderParseError};
use iqa_core::imagecore::ImageError;
use iqa_core::metrics::{MetricError, ReportError};
use iqa_core::model::{CheckpointError, ModelError};
use iqa_core::trainer::TrainError;

#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Io(String),
    Internal(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Io(_) => 2,
            Failure::Internal(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Validation(m) => write!(f, "{m}"),
            Failure::Io(m) => write!(f, "{m}"),
            Failure::Internal(m) => write!(f, "internal: {m}"),
        }
    }
}

impl From<DatasetError> for Failure {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io { .. } => Failure::Io(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<LadderParseError> for Failure {
    fn from(e: LadderParseError) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<DistortError> for Failure {
    fn from(e: DistortError) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<GenerateError> for Failure {
    fn from(e: GenerateError) -> Self {
        match e {
            GenerateError::Distort(inner) => inner.into(),
            GenerateError::OutputDir { .. } | GenerateError::Sources { .. } => {
                Failure::Io(e.to_string())
            }
        }
    }
}

impl From<ImageError> for Failure {
    fn from(e: ImageError) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<CheckpointError> for Failure {
    fn from(e: CheckpointError) -> Self {
        match e {
            CheckpointError::Io(_) => Failure::Io(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Failure::Internal(e.to_string())
    }
}

impl From<MetricError> for Failure {
    fn from(e: MetricError) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<TrainError> for Failure {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Source { .. } => Failure::Io(e.to_string()),
            TrainError::Model(_) => Failure::Internal(e.to_string()),
            TrainError::Dataset(inner) => inner.into(),
            TrainError::Image(inner) => inner.into(),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<iqa_core::fixtures::FixtureError> for Failure {
    fn from(e: iqa_core::fixtures::FixtureError) -> Self {
        use iqa_core::fixtures::FixtureError;
        match e {
            FixtureError::Io { .. } => Failure::Io(e.to_string()),
            FixtureError::Generate(inner) => inner.into(),
            FixtureError::Image(inner) => inner.into(),
        }
    }
}
