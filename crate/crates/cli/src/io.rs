//! Shared artifact plumbing: corpus loading, JSON files, result stamps.

use std::fs;
use std::path::{Path, PathBuf};

use iqa_core::datasets::{self, DatasetDescriptor, ImageRecord};
use serde_json::json;

use crate::failure::Failure;

pub fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

pub fn create_out_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))
}

pub fn load_descriptor(path: &Path) -> Result<DatasetDescriptor, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Validation(format!("descriptor {}: {e}", path.display())))
}

pub fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::Internal(format!("serializing {}: {e}", path.display())))?;
    fs::write(path, text + "\n").map_err(|e| io_failure(path, e))
}

/// Loads manifest/descriptor pairs; multiple datasets are merged into one
/// id-prefixed corpus, a single dataset is passed through untouched.
pub fn load_corpus(
    manifests: &[PathBuf],
    descriptors: &[PathBuf],
) -> Result<(Vec<DatasetDescriptor>, Vec<ImageRecord>), Failure> {
    if manifests.len() != descriptors.len() {
        return Err(Failure::Validation(format!(
            "{} manifest(s) but {} descriptor(s); pass one --descriptor per --manifest",
            manifests.len(),
            descriptors.len()
        )));
    }
    let mut pairs = Vec::new();
    for (manifest, descriptor) in manifests.iter().zip(descriptors) {
        let records = datasets::read_manifest(manifest)?;
        pairs.push((load_descriptor(descriptor)?, records));
    }
    let descriptors: Vec<DatasetDescriptor> = pairs.iter().map(|(d, _)| d.clone()).collect();
    let records = if pairs.len() == 1 {
        pairs.pop().unwrap().1
    } else {
        datasets::merge_domains(&pairs)?
    };
    Ok((descriptors, records))
}

/// Stamps `result.json` into the output directory: the machine-readable
/// record of what a successful command produced.
pub fn write_result(
    out_dir: &Path,
    command: &str,
    outputs: &[(&str, &Path)],
) -> Result<PathBuf, Failure> {
    let path = out_dir.join("result.json");
    let listed: serde_json::Map<String, serde_json::Value> = outputs
        .iter()
        .map(|(name, p)| (name.to_string(), json!(p.display().to_string())))
        .collect();
    let value = json!({
        "command": command,
        "status": "ok",
        "outputs": listed,
    });
    write_json(&path, &value)?;
    Ok(path)
}
