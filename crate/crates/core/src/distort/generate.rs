//! Batch expansion of a pristine image set into a distorted dataset on disk.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{apply, DistortError, DistortionLadder, DistortionSpec};
use crate::datasets::{self, ImageRecord};
use crate::imagecore::{self, ImageFormat, PixelImage, JPEG_CODEC_ID};

/// Provenance sidecar written next to a generated manifest. Lossy re-encoding
/// depends on the JPEG codec, so the codec identifier is recorded to make a
/// generated corpus auditable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerationMeta {
    pub jpeg_codec: String,
    pub tool_version: String,
    pub ladder: Vec<DistortionSpec>,
    pub pristine_count: usize,
    pub distorted_count: usize,
}

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("output directory {path}: {message}")]
    OutputDir { path: PathBuf, message: String },
    #[error("{} source image(s) failed; first: {}: {}", failures.len(), failures[0].id, failures[0].message)]
    Sources { failures: Vec<SourceFailure> },
    #[error(transparent)]
    Distort(#[from] DistortError),
}

/// One failed source image, kept so a batch run can report every failure.
#[derive(Debug)]
pub struct SourceFailure {
    pub id: String,
    pub path: PathBuf,
    pub message: String,
}

/// Applies every ladder entry to one decoded image. Output order follows the
/// ladder.
pub fn expand_pristine(
    img: &PixelImage,
    ladder: &DistortionLadder,
) -> Result<Vec<(DistortionSpec, PixelImage)>, DistortError> {
    ladder
        .specs()
        .iter()
        .map(|spec| apply(img, spec).map(|out| (*spec, out)))
        .collect()
}

/// Expands pristine manifest entries into `out_dir`.
///
/// Every input image is re-encoded as PNG (`{id}.png`) and each ladder entry
/// produces `{id}__{family}_l{level}.png`. Writes `manifest.csv` and
/// `generation_meta.json` into `out_dir` and returns the manifest rows,
/// pristine row first per source image. Sources are processed in parallel;
/// per-source failures are collected and reported together.
pub fn generate_dataset(
    pristine: &[ImageRecord],
    ladder: &DistortionLadder,
    out_dir: &Path,
) -> Result<Vec<ImageRecord>, GenerateError> {
    for spec in ladder.specs() {
        spec.validate()?;
    }
    fs::create_dir_all(out_dir).map_err(|e| GenerateError::OutputDir {
        path: out_dir.to_path_buf(),
        message: e.to_string(),
    })?;

    let results: Vec<Result<Vec<ImageRecord>, SourceFailure>> = pristine
        .par_iter()
        .map(|record| expand_one(record, ladder, out_dir))
        .collect();

    let mut rows = Vec::with_capacity(pristine.len() * (ladder.len() + 1));
    let mut failures = Vec::new();
    for result in results {
        match result {
            Ok(mut r) => rows.append(&mut r),
            Err(f) => failures.push(f),
        }
    }
    if !failures.is_empty() {
        return Err(GenerateError::Sources { failures });
    }

    let meta = GenerationMeta {
        jpeg_codec: JPEG_CODEC_ID.to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        ladder: ladder.specs().to_vec(),
        pristine_count: pristine.len(),
        distorted_count: rows.len() - pristine.len(),
    };
    let meta_json = serde_json::to_string_pretty(&meta).expect("meta serializes");
    fs::write(out_dir.join("generation_meta.json"), meta_json).map_err(|e| {
        GenerateError::OutputDir {
            path: out_dir.join("generation_meta.json"),
            message: e.to_string(),
        }
    })?;
    datasets::write_manifest(&out_dir.join("manifest.csv"), &rows).map_err(|e| {
        GenerateError::OutputDir {
            path: out_dir.join("manifest.csv"),
            message: e.to_string(),
        }
    })?;
    Ok(rows)
}

fn expand_one(
    record: &ImageRecord,
    ladder: &DistortionLadder,
    out_dir: &Path,
) -> Result<Vec<ImageRecord>, SourceFailure> {
    let fail = |message: String| SourceFailure {
        id: record.id.clone(),
        path: record.path.clone(),
        message,
    };

    let format = imagecore::format_for_path(&record.path)
        .ok_or_else(|| fail("unrecognized file extension".to_string()))?;
    let bytes = fs::read(&record.path).map_err(|e| fail(e.to_string()))?;
    let img = imagecore::decode(&bytes, format).map_err(|e| fail(e.to_string()))?;

    let mut rows = Vec::with_capacity(ladder.len() + 1);
    let pristine_name = format!("{}.png", record.id);
    write_png(&img, &out_dir.join(&pristine_name)).map_err(&fail)?;
    rows.push(ImageRecord {
        path: out_dir.join(&pristine_name),
        family: None,
        level: None,
        ..record.clone()
    });

    for spec in ladder.specs() {
        let distorted = apply(&img, spec).map_err(|e| fail(e.to_string()))?;
        let name = format!("{}__{}_l{}.png", record.id, spec.family, spec.level);
        write_png(&distorted, &out_dir.join(&name)).map_err(&fail)?;
        rows.push(ImageRecord {
            id: format!("{}__{}_l{}", record.id, spec.family, spec.level),
            subject_id: record.subject_id.clone(),
            path: out_dir.join(&name),
            source: record.source.clone(),
            family: Some(spec.family),
            level: Some(spec.level),
            mos: None,
            native_min: None,
            native_max: None,
        });
    }
    Ok(rows)
}

fn write_png(img: &PixelImage, path: &Path) -> Result<(), String> {
    let bytes = imagecore::encode(img, ImageFormat::Png, 100).map_err(|e| e.to_string())?;
    fs::write(path, bytes).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn checker(w: u32, h: u32) -> PixelImage {
        let mut img = PixelImage::filled(w, h, [0, 0, 0]);
        for y in 0..h {
            for x in 0..w {
                let v = if (x / 4 + y / 4) % 2 == 0 { 70 } else { 190 };
                img.set(x, y, [v, v, v]);
            }
        }
        img
    }

    fn pristine_record(id: &str, path: PathBuf) -> ImageRecord {
        ImageRecord {
            id: id.to_string(),
            subject_id: id.to_string(),
            path,
            source: "unit".to_string(),
            family: None,
            level: None,
            mos: None,
            native_min: None,
            native_max: None,
        }
    }

    #[test]
    fn expand_pristine_yields_one_image_per_ladder_entry() {
        let ladder = DistortionLadder::default();
        let out = expand_pristine(&checker(16, 16), &ladder).unwrap();
        assert_eq!(out.len(), 18);
        for ((spec, img), expected) in out.iter().zip(ladder.specs()) {
            assert_eq!(spec, expected);
            assert_eq!((img.width(), img.height()), (16, 16));
        }
    }

    #[test]
    fn generate_dataset_writes_manifest_meta_and_19_files_per_source() {
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("src.png");
        let bytes = imagecore::encode(&checker(16, 16), ImageFormat::Png, 100).unwrap();
        fs::write(&src, bytes).unwrap();

        let out_dir = dir.path().join("out");
        let record = pristine_record("img0", src);
        let rows = generate_dataset(&[record], &DistortionLadder::default(), &out_dir).unwrap();

        assert_eq!(rows.len(), 19);
        assert_eq!(rows[0].id, "img0");
        assert!(rows[0].family.is_none());
        assert_eq!(rows[1].id, "img0__jpeg_compression_l1");
        for row in &rows {
            assert!(row.path.exists(), "missing {:?}", row.path);
            assert_eq!(row.subject_id, "img0");
        }
        assert!(out_dir.join("manifest.csv").exists());

        let meta: GenerationMeta = serde_json::from_str(
            &fs::read_to_string(out_dir.join("generation_meta.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(meta.jpeg_codec, JPEG_CODEC_ID);
        assert_eq!(meta.pristine_count, 1);
        assert_eq!(meta.distorted_count, 18);
    }

    #[test]
    fn generate_dataset_reports_every_failed_source() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("good.png");
        let bytes = imagecore::encode(&checker(16, 16), ImageFormat::Png, 100).unwrap();
        fs::write(&good, bytes).unwrap();

        let records = vec![
            pristine_record("a", dir.path().join("missing_a.png")),
            pristine_record("b", good),
            pristine_record("c", dir.path().join("missing_c.png")),
        ];
        let err = generate_dataset(
            &records,
            &DistortionLadder::default(),
            &dir.path().join("out"),
        )
        .unwrap_err();
        match err {
            GenerateError::Sources { failures } => {
                let ids: Vec<&str> = failures.iter().map(|f| f.id.as_str()).collect();
                assert_eq!(ids, vec!["a", "c"]);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }
}
