//! Shared image and feature caches for training and evaluation.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::{Arc, Mutex};

use super::{eval_transform, TrainError};
use crate::datasets::ImageRecord;
use crate::imagecore::{self, PixelImage};
use crate::model::{extract_features, FeatureVector};

/// Decoded images keyed by path, and evaluation-mode features keyed by record
/// id and input size.
///
/// One store is meant to outlive a whole experiment: distinct training runs
/// touch the same images, and evaluation features for a given input size
/// never change, so both caches are shared across runs and threads.
#[derive(Default)]
pub struct ImageStore {
    images: Mutex<HashMap<String, Arc<PixelImage>>>,
    eval_features: Mutex<HashMap<(String, u32), FeatureVector>>,
}

impl ImageStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Seeds the image cache, bypassing the filesystem for that path.
    pub fn preload(&self, path: &Path, img: PixelImage) {
        let key = path.to_string_lossy().into_owned();
        self.images.lock().unwrap().insert(key, Arc::new(img));
    }

    /// The decoded image behind a record, from cache or disk.
    pub fn image(&self, record: &ImageRecord) -> Result<Arc<PixelImage>, TrainError> {
        let key = record.path.to_string_lossy().into_owned();
        if let Some(img) = self.images.lock().unwrap().get(&key) {
            return Ok(Arc::clone(img));
        }

        let fail = |message: String| TrainError::Source {
            id: record.id.clone(),
            path: record.path.clone(),
            message,
        };
        let format = imagecore::format_for_path(&record.path)
            .ok_or_else(|| fail("unrecognized file extension".to_string()))?;
        let bytes = fs::read(&record.path).map_err(|e| fail(e.to_string()))?;
        let img = Arc::new(imagecore::decode(&bytes, format).map_err(|e| fail(e.to_string()))?);

        let mut cache = self.images.lock().unwrap();
        let entry = cache.entry(key).or_insert_with(|| Arc::clone(&img));
        Ok(Arc::clone(entry))
    }

    /// Evaluation-mode features for a record at the given input size.
    pub fn eval_features(
        &self,
        record: &ImageRecord,
        input_size: u32,
    ) -> Result<FeatureVector, TrainError> {
        let key = (record.id.clone(), input_size);
        if let Some(features) = self.eval_features.lock().unwrap().get(&key) {
            return Ok(features.clone());
        }

        let img = self.image(record)?;
        let features = extract_features(&eval_transform(&img, input_size)?)?;
        self.eval_features
            .lock()
            .unwrap()
            .insert(key, features.clone());
        Ok(features)
    }
}
