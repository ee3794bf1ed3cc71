//! Dataset descriptors, rating aggregation, score harmonization to [1, 10],
//! subject-grouped splits, leakage auditing, and cross-domain merging.
//!
//! A "subject" is the grouping key for splits: the pristine ancestor id for
//! artificially distorted datasets, the image itself for independent images.
//! Keeping all images of a subject in one partition is what prevents
//! train/test leakage through near-duplicate content.

mod io;
mod split;

pub use io::{
    read_manifest, read_ratings, read_split_plan, write_manifest, write_ratings, write_split_plan,
    RatingRow,
};
pub use split::{
    make_splits, verify_no_leakage, LeakageReport, LeakageViolation, SplitRatios, DEFAULT_RATIOS,
};

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distort::DistortionFamily;

/// The harmonized score range every dataset is mapped onto.
pub const HARMONIZED_RANGE: (f64, f64) = (1.0, 10.0);

/// One image with its provenance and (possibly harmonized) score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub id: String,
    pub subject_id: String,
    pub path: PathBuf,
    pub source: String,
    pub family: Option<DistortionFamily>,
    pub level: Option<u8>,
    pub mos: Option<f64>,
    pub native_min: Option<f64>,
    pub native_max: Option<f64>,
}

impl ImageRecord {
    /// The record's own native range when present, else `fallback`.
    pub fn native_range_or(&self, fallback: (f64, f64)) -> (f64, f64) {
        match (self.native_min, self.native_max) {
            (Some(min), Some(max)) => (min, max),
            _ => fallback,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistortionKind {
    Authentic,
    Artificial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitPolicy {
    /// Subjects are spread over train, val, and test.
    Full,
    /// Subjects never enter the test partition.
    TrainValOnly,
    /// Subjects always land in the test partition.
    TestOnly,
}

/// Static facts about one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetDescriptor {
    pub name: String,
    pub native_range: (f64, f64),
    pub distortion_type: DistortionKind,
    pub split_policy: SplitPolicy,
}

impl DatasetDescriptor {
    pub fn new(
        name: &str,
        native_range: (f64, f64),
        distortion_type: DistortionKind,
        split_policy: SplitPolicy,
    ) -> Self {
        Self {
            name: name.to_string(),
            native_range,
            distortion_type,
            split_policy,
        }
    }

    /// Descriptors for the six published photographic datasets this tool
    /// knows out of the box. Score ranges are the published ones; biq2021
    /// serves only train/val and live_itw only test.
    pub fn stock() -> Vec<DatasetDescriptor> {
        use DistortionKind::*;
        use SplitPolicy::*;
        vec![
            Self::new("koniq10k", (1.0, 5.0), Authentic, Full),
            Self::new("gfiqa20k", (0.0, 1.0), Authentic, Full),
            Self::new("spaq", (0.0, 100.0), Authentic, Full),
            Self::new("biq2021", (0.0, 1.0), Authentic, TrainValOnly),
            Self::new("live_itw", (0.0, 100.0), Authentic, TestOnly),
            Self::new("kadid10k", (1.0, 5.0), Artificial, Full),
        ]
    }

    pub fn stock_by_name(name: &str) -> Option<DatasetDescriptor> {
        Self::stock().into_iter().find(|d| d.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    Train,
    Val,
    Test,
}

impl Partition {
    pub const ALL: [Partition; 3] = [Partition::Train, Partition::Val, Partition::Test];

    pub fn as_str(&self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Val => "val",
            Partition::Test => "test",
        }
    }
}

impl std::fmt::Display for Partition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One subject's partition for one repetition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectAssignment {
    pub repetition: u32,
    pub subject_id: String,
    pub partition: Partition,
}

/// Subject-to-partition assignments for every repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan {
    assignments: Vec<SubjectAssignment>,
    repetitions: u32,
}

impl SplitPlan {
    /// Wraps raw assignments (also the path for hand-built or loaded plans,
    /// which may deliberately violate invariants for auditing).
    pub fn from_assignments(assignments: Vec<SubjectAssignment>) -> Self {
        let repetitions = assignments
            .iter()
            .map(|a| a.repetition + 1)
            .max()
            .unwrap_or(0);
        Self {
            assignments,
            repetitions,
        }
    }

    pub fn assignments(&self) -> &[SubjectAssignment] {
        &self.assignments
    }

    pub fn repetitions(&self) -> u32 {
        self.repetitions
    }

    /// The partition of `subject_id` in `repetition`, if assigned exactly
    /// once or to one consistent partition.
    pub fn partition_of(&self, repetition: u32, subject_id: &str) -> Option<Partition> {
        let mut found = None;
        for a in &self.assignments {
            if a.repetition == repetition && a.subject_id == subject_id {
                match found {
                    None => found = Some(a.partition),
                    Some(p) if p == a.partition => {}
                    Some(_) => return None,
                }
            }
        }
        found
    }

    /// Subjects of one partition in one repetition, in assignment order.
    pub fn subjects_in(&self, repetition: u32, partition: Partition) -> Vec<&str> {
        self.assignments
            .iter()
            .filter(|a| a.repetition == repetition && a.partition == partition)
            .map(|a| a.subject_id.as_str())
            .collect()
    }

    /// Subject counts per partition for one repetition.
    pub fn partition_counts(&self, repetition: u32) -> BTreeMap<Partition, usize> {
        let mut counts = BTreeMap::new();
        for a in &self.assignments {
            if a.repetition == repetition {
                *counts.entry(a.partition).or_insert(0) += 1;
            }
        }
        counts
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum DatasetError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("duplicate image id {id:?}")]
    DuplicateId { id: String },
    #[error("image {id:?} has neither ratings nor a score")]
    MissingScore { id: String },
    #[error("rating {value} outside the 1..=10 annotation scale")]
    RatingOutOfScale { value: u8 },
    #[error("no ratings to aggregate")]
    EmptyRatings,
    #[error("native range [{min}, {max}] is not a proper interval")]
    InvalidNativeRange { min: f64, max: f64 },
    #[error("score {value} of {id:?} outside native range [{min}, {max}]")]
    ValueOutsideNativeRange {
        id: String,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("record {id:?} is not harmonized to [1, 10] (score {mos:?})")]
    UnharmonizedRecord { id: String, mos: Option<f64> },
    #[error("no descriptor for dataset {name:?}")]
    MissingDescriptor { name: String },
    #[error("dataset {name:?} has {subjects} subject(s), policy needs at least {required}")]
    InfeasiblePolicy {
        name: String,
        subjects: usize,
        required: usize,
    },
    #[error("split ratios must be positive and sum to 1 (got {train}, {val}, {test})")]
    InvalidRatios { train: f64, val: f64, test: f64 },
}

/// Arithmetic mean of per-observer ratings on the integer 1..=10 scale.
pub fn aggregate_mos(ratings: &[u8]) -> Result<f64, DatasetError> {
    if ratings.is_empty() {
        return Err(DatasetError::EmptyRatings);
    }
    if let Some(&value) = ratings.iter().find(|r| !(1..=10).contains(*r)) {
        return Err(DatasetError::RatingOutOfScale { value });
    }
    Ok(ratings.iter().map(|&r| r as f64).sum::<f64>() / ratings.len() as f64)
}

/// Affine map from a native score range onto [1, 10].
pub fn rescale_mos(value: f64, native_range: (f64, f64)) -> Result<f64, DatasetError> {
    let (min, max) = native_range;
    if !(min.is_finite() && max.is_finite() && min < max) {
        return Err(DatasetError::InvalidNativeRange { min, max });
    }
    if !value.is_finite() || value < min || value > max {
        return Err(DatasetError::ValueOutsideNativeRange {
            id: String::new(),
            value,
            min,
            max,
        });
    }
    Ok(1.0 + 9.0 * (value - min) / (max - min))
}

/// Resolves each record's score (per-observer ratings win over a precomputed
/// score and are re-aggregated), rescales it onto [1, 10], and stamps the
/// harmonized range. Harmonizing an already harmonized dataset is a no-op.
pub fn harmonize_records(
    records: &[ImageRecord],
    ratings: &[RatingRow],
    descriptor: &DatasetDescriptor,
) -> Result<Vec<ImageRecord>, DatasetError> {
    let mut by_image: BTreeMap<&str, Vec<u8>> = BTreeMap::new();
    for row in ratings {
        by_image.entry(&row.image_id).or_default().push(row.rating);
    }

    let mut out = Vec::with_capacity(records.len());
    for record in records {
        let (native, raw) = match by_image.get(record.id.as_str()) {
            // Ratings are already on the annotation scale, not the dataset's
            // native one.
            Some(rs) => (HARMONIZED_RANGE, aggregate_mos(rs)?),
            None => {
                let raw = record.mos.ok_or_else(|| DatasetError::MissingScore {
                    id: record.id.clone(),
                })?;
                (record.native_range_or(descriptor.native_range), raw)
            }
        };
        let mos = rescale_mos(raw, native).map_err(|e| match e {
            DatasetError::ValueOutsideNativeRange {
                value, min, max, ..
            } => DatasetError::ValueOutsideNativeRange {
                id: record.id.clone(),
                value,
                min,
                max,
            },
            other => other,
        })?;
        out.push(ImageRecord {
            mos: Some(mos),
            native_min: Some(HARMONIZED_RANGE.0),
            native_max: Some(HARMONIZED_RANGE.1),
            source: descriptor.name.clone(),
            ..record.clone()
        });
    }
    Ok(out)
}

/// Concatenates harmonized datasets into one corpus. Image and subject ids
/// are prefixed with the dataset name so they stay globally unique and
/// subjects never collide across sources.
pub fn merge_domains(
    domains: &[(DatasetDescriptor, Vec<ImageRecord>)],
) -> Result<Vec<ImageRecord>, DatasetError> {
    let mut out = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for (descriptor, records) in domains {
        for record in records {
            let in_range = record
                .mos
                .is_some_and(|m| (HARMONIZED_RANGE.0..=HARMONIZED_RANGE.1).contains(&m));
            if !in_range {
                return Err(DatasetError::UnharmonizedRecord {
                    id: record.id.clone(),
                    mos: record.mos,
                });
            }
            let id = format!("{}/{}", descriptor.name, record.id);
            if !seen.insert(id.clone()) {
                return Err(DatasetError::DuplicateId { id });
            }
            out.push(ImageRecord {
                id,
                subject_id: format!("{}/{}", descriptor.name, record.subject_id),
                source: descriptor.name.clone(),
                ..record.clone()
            });
        }
    }
    Ok(out)
}

/// Sorted unique subject ids of `records`, optionally limited to one source.
pub fn subjects_of<'a>(records: &'a [ImageRecord], source: Option<&str>) -> Vec<&'a str> {
    let set: BTreeSet<&str> = records
        .iter()
        .filter(|r| source.is_none_or(|s| r.source == s))
        .map(|r| r.subject_id.as_str())
        .collect();
    set.into_iter().collect()
}
