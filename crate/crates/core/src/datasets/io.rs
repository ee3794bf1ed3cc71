//! CSV persistence for manifests, per-observer ratings, and split plans.
//!
//! Formats (headers are required, empty fields mean "absent"):
//! - manifest: `id,subject_id,path,source,family,level,mos,native_min,native_max`
//! - ratings:  `image_id,observer_id,rating`
//! - split plan: `repetition,subject_id,partition`

use std::collections::BTreeSet;
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DatasetError, ImageRecord, SplitPlan, SubjectAssignment};

/// One observer's rating of one image on the integer 1..=10 scale.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRow {
    pub image_id: String,
    pub observer_id: String,
    pub rating: u8,
}

fn csv_err(path: &Path, e: impl std::fmt::Display) -> DatasetError {
    DatasetError::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> DatasetError {
    DatasetError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, DatasetError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let mut rows = Vec::new();
    for row in reader.deserialize() {
        rows.push(row.map_err(|e| csv_err(path, e))?);
    }
    Ok(rows)
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), DatasetError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    for row in rows {
        writer.serialize(row).map_err(|e| csv_err(path, e))?;
    }
    writer.flush().map_err(|e| io_err(path, e))
}

/// Reads a manifest and validates id uniqueness and per-row consistency.
pub fn read_manifest(path: &Path) -> Result<Vec<ImageRecord>, DatasetError> {
    let rows: Vec<ImageRecord> = read_rows(path)?;
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    for row in &rows {
        if !seen.insert(&row.id) {
            return Err(DatasetError::DuplicateId { id: row.id.clone() });
        }
        if let Some(mos) = row.mos {
            if !mos.is_finite() {
                return Err(csv_err(path, format!("non-finite score on id {:?}", row.id)));
            }
        }
        match (row.native_min, row.native_max) {
            (Some(min), Some(max)) => {
                if !(min.is_finite() && max.is_finite() && min < max) {
                    return Err(DatasetError::InvalidNativeRange { min, max });
                }
            }
            (None, None) => {}
            _ => {
                return Err(csv_err(
                    path,
                    format!("id {:?}: native_min and native_max must both be set", row.id),
                ));
            }
        }
    }
    Ok(rows)
}

pub fn write_manifest(path: &Path, records: &[ImageRecord]) -> Result<(), DatasetError> {
    write_rows(path, records)
}

pub fn read_ratings(path: &Path) -> Result<Vec<RatingRow>, DatasetError> {
    let rows: Vec<RatingRow> = read_rows(path)?;
    for row in &rows {
        if !(1..=10).contains(&row.rating) {
            return Err(DatasetError::RatingOutOfScale { value: row.rating });
        }
    }
    Ok(rows)
}

pub fn write_ratings(path: &Path, rows: &[RatingRow]) -> Result<(), DatasetError> {
    write_rows(path, rows)
}

pub fn read_split_plan(path: &Path) -> Result<SplitPlan, DatasetError> {
    let rows: Vec<SubjectAssignment> = read_rows(path)?;
    Ok(SplitPlan::from_assignments(rows))
}

pub fn write_split_plan(path: &Path, plan: &SplitPlan) -> Result<(), DatasetError> {
    write_rows(path, plan.assignments())
}
