//! Versioned binary checkpoint container.
//!
//! A checkpoint bundles everything needed to score an image: the feature
//! scaler fitted on the training partition, the target standardization
//! parameters, all network weights, and a snapshot of the training config.
//!
//! # File layout (version 1)
//!
//! All integers are unsigned little-endian; all reals are little-endian
//! IEEE-754 binary64.
//!
//! ```text
//! bytes  field
//! 8      magic "IQAFCKPT"
//! 4      format version, currently 1
//! 4      feature tag length T
//! T      feature tag, UTF-8 (must match the built-in extractor tag)
//! 4      feature dimension F
//! 8*F    scaler means
//! 8*F    scaler standard deviations
//! 8      target mean
//! 8      target standard deviation
//! 4      layer count L
//! per layer (L times):
//!   4        out_dim
//!   4        in_dim
//!   8*out*in weights, row-major [out][in]
//!   8*out    biases
//! 4      config JSON length C
//! C      config snapshot, UTF-8 JSON
//! ```
//!
//! Writes are deterministic: identical inputs produce byte-identical files.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::features::{extract_features, FeatureVector, FEATURE_DIM, FEATURE_TAG};
use super::mlp::{Layer, MlpRegressor};
use super::ModelError;
use crate::imagecore::PixelImage;

const MAGIC: &[u8; 8] = b"IQAFCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Upper bound for string/dimension fields when reading, so corrupt headers
/// fail fast instead of allocating gigabytes.
const SANITY_LIMIT: u32 = 16 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o: {0}")]
    Io(String),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {found} (expected {CHECKPOINT_VERSION})")]
    UnsupportedVersion { found: u32 },
    #[error("checkpoint built for feature extractor {found:?}, this build has {expected:?}")]
    FeatureTagMismatch { found: String, expected: String },
    #[error("corrupt checkpoint: {reason}")]
    Corrupt { reason: String },
}

impl From<std::io::Error> for CheckpointError {
    fn from(e: std::io::Error) -> Self {
        CheckpointError::Io(e.to_string())
    }
}

/// Per-dimension standardization fitted on training features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl FeatureScaler {
    /// Fits means and population standard deviations per dimension.
    pub fn fit(features: &[FeatureVector]) -> Result<Self, ModelError> {
        if features.is_empty() {
            return Err(ModelError::EmptyCorpus);
        }
        let n = features.len() as f64;
        let mut means = vec![0.0; FEATURE_DIM];
        for f in features {
            for (m, v) in means.iter_mut().zip(f.as_slice()) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut stds = vec![0.0; FEATURE_DIM];
        for f in features {
            for (s, (v, m)) in stds.iter_mut().zip(f.as_slice().iter().zip(&means)) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut stds {
            *s = (*s / n).sqrt();
        }
        Ok(Self { means, stds })
    }

    /// Identity scaler, useful for hand-built test checkpoints.
    pub fn identity() -> Self {
        Self {
            means: vec![0.0; FEATURE_DIM],
            stds: vec![1.0; FEATURE_DIM],
        }
    }

    /// `(f - mean) / std` per dimension; constant dimensions (std ~ 0) pass
    /// through centered instead of exploding.
    pub fn transform(&self, features: &FeatureVector) -> Vec<f64> {
        features
            .as_slice()
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| {
                let denom = if *s < 1e-12 { 1.0 } else { *s };
                (v - m) / denom
            })
            .collect()
    }
}

/// A trained model plus the data plumbing needed to apply it.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCheckpoint {
    pub feature_tag: String,
    pub feature_scaler: FeatureScaler,
    /// Training-target standardization: the network regresses
    /// `(mos - target_mean) / target_std`.
    pub target_mean: f64,
    pub target_std: f64,
    pub model: MlpRegressor,
    /// JSON snapshot of the training configuration, for provenance.
    pub config_json: String,
}

impl ModelCheckpoint {
    /// Scores pre-extracted features on the harmonized [1, 10] scale.
    pub fn predict_features(&self, features: &FeatureVector) -> Result<f64, ModelError> {
        let scaled = self.feature_scaler.transform(features);
        let raw = self.model.forward_eval(&scaled)?;
        Ok(raw * self.target_std + self.target_mean)
    }

    /// Scores an image (already at the model input size).
    pub fn predict_image(&self, img: &PixelImage) -> Result<f64, ModelError> {
        self.predict_features(&extract_features(img)?)
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<(), CheckpointError> {
        w.write_all(MAGIC)?;
        write_u32(&mut w, CHECKPOINT_VERSION)?;
        write_string(&mut w, &self.feature_tag)?;
        let dim = self.feature_scaler.means.len();
        if self.feature_scaler.stds.len() != dim {
            return Err(CheckpointError::Corrupt {
                reason: "scaler means/stds length mismatch".into(),
            });
        }
        write_u32(&mut w, dim as u32)?;
        for v in &self.feature_scaler.means {
            write_f64(&mut w, *v)?;
        }
        for v in &self.feature_scaler.stds {
            write_f64(&mut w, *v)?;
        }
        write_f64(&mut w, self.target_mean)?;
        write_f64(&mut w, self.target_std)?;
        write_u32(&mut w, self.model.layers().len() as u32)?;
        for layer in self.model.layers() {
            write_u32(&mut w, layer.out_dim as u32)?;
            write_u32(&mut w, layer.in_dim as u32)?;
            for v in &layer.weights {
                write_f64(&mut w, *v)?;
            }
            for v in &layer.biases {
                write_f64(&mut w, *v)?;
            }
        }
        write_string(&mut w, &self.config_json)?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self, CheckpointError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)
            .map_err(|_| CheckpointError::BadMagic)?;
        if &magic != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = read_u32(&mut r)?;
        if version != CHECKPOINT_VERSION {
            return Err(CheckpointError::UnsupportedVersion { found: version });
        }
        let feature_tag = read_string(&mut r)?;
        if feature_tag != FEATURE_TAG {
            return Err(CheckpointError::FeatureTagMismatch {
                found: feature_tag,
                expected: FEATURE_TAG.to_string(),
            });
        }
        let dim = read_u32(&mut r)? as usize;
        if dim as u32 > SANITY_LIMIT {
            return Err(CheckpointError::Corrupt {
                reason: format!("implausible feature dimension {dim}"),
            });
        }
        let means = read_f64_vec(&mut r, dim)?;
        let stds = read_f64_vec(&mut r, dim)?;
        let target_mean = read_f64(&mut r)?;
        let target_std = read_f64(&mut r)?;

        let layer_count = read_u32(&mut r)?;
        if layer_count > 1024 {
            return Err(CheckpointError::Corrupt {
                reason: format!("implausible layer count {layer_count}"),
            });
        }
        let mut layers = Vec::with_capacity(layer_count as usize);
        for _ in 0..layer_count {
            let out_dim = read_u32(&mut r)?;
            let in_dim = read_u32(&mut r)?;
            if out_dim > SANITY_LIMIT || in_dim > SANITY_LIMIT {
                return Err(CheckpointError::Corrupt {
                    reason: format!("implausible layer shape {out_dim}x{in_dim}"),
                });
            }
            let weights = read_f64_vec(&mut r, out_dim as usize * in_dim as usize)?;
            let biases = read_f64_vec(&mut r, out_dim as usize)?;
            layers.push(Layer {
                in_dim: in_dim as usize,
                out_dim: out_dim as usize,
                weights,
                biases,
            });
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(CheckpointError::Corrupt {
                    reason: "layer shapes do not chain".into(),
                });
            }
        }
        match layers.last() {
            Some(l) if l.out_dim == 1 => {}
            _ => {
                return Err(CheckpointError::Corrupt {
                    reason: "final layer must produce one output".into(),
                });
            }
        }
        if layers[0].in_dim != dim {
            return Err(CheckpointError::Corrupt {
                reason: "first layer width does not match feature dimension".into(),
            });
        }

        let config_json = read_string(&mut r)?;
        Ok(Self {
            feature_tag,
            feature_scaler: FeatureScaler { means, stds },
            target_mean,
            target_std,
            model: MlpRegressor::from_layers(layers),
            config_json,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let file = File::create(path)?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let file = File::open(path)?;
        Self::read_from(BufReader::new(file))
    }
}

fn write_u32(w: &mut impl Write, v: u32) -> Result<(), CheckpointError> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_f64(w: &mut impl Write, v: f64) -> Result<(), CheckpointError> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_string(w: &mut impl Write, s: &str) -> Result<(), CheckpointError> {
    write_u32(w, s.len() as u32)?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32, CheckpointError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(truncated)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f64(r: &mut impl Read) -> Result<f64, CheckpointError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf).map_err(truncated)?;
    Ok(f64::from_le_bytes(buf))
}

fn read_f64_vec(r: &mut impl Read, n: usize) -> Result<Vec<f64>, CheckpointError> {
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(read_f64(r)?);
    }
    Ok(out)
}

fn read_string(r: &mut impl Read) -> Result<String, CheckpointError> {
    let len = read_u32(r)?;
    if len > SANITY_LIMIT {
        return Err(CheckpointError::Corrupt {
            reason: format!("implausible string length {len}"),
        });
    }
    let mut buf = vec![0u8; len as usize];
    r.read_exact(&mut buf).map_err(truncated)?;
    String::from_utf8(buf).map_err(|_| CheckpointError::Corrupt {
        reason: "string field is not UTF-8".into(),
    })
}

fn truncated(_: std::io::Error) -> CheckpointError {
    CheckpointError::Corrupt {
        reason: "file truncated".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::stream_rng;

    fn sample_checkpoint() -> ModelCheckpoint {
        let mut rng = stream_rng(3, "init", &[]);
        ModelCheckpoint {
            feature_tag: FEATURE_TAG.to_string(),
            feature_scaler: FeatureScaler::identity(),
            target_mean: 5.5,
            target_std: 2.25,
            model: MlpRegressor::new(&[FEATURE_DIM, 64, 16, 1], &mut rng),
            config_json: "{\"epochs\":20}".to_string(),
        }
    }

    #[test]
    fn roundtrip_preserves_everything() {
        let ckpt = sample_checkpoint();
        let mut buf = Vec::new();
        ckpt.write_to(&mut buf).unwrap();
        let loaded = ModelCheckpoint::read_from(buf.as_slice()).unwrap();
        assert_eq!(loaded, ckpt);
    }

    #[test]
    fn writes_are_byte_stable() {
        let ckpt = sample_checkpoint();
        let mut a = Vec::new();
        let mut b = Vec::new();
        ckpt.write_to(&mut a).unwrap();
        ckpt.write_to(&mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bad_magic_and_version_are_rejected() {
        let ckpt = sample_checkpoint();
        let mut buf = Vec::new();
        ckpt.write_to(&mut buf).unwrap();

        let mut wrong_magic = buf.clone();
        wrong_magic[0] = b'X';
        assert!(matches!(
            ModelCheckpoint::read_from(wrong_magic.as_slice()),
            Err(CheckpointError::BadMagic)
        ));

        let mut wrong_version = buf.clone();
        wrong_version[8] = 99;
        assert!(matches!(
            ModelCheckpoint::read_from(wrong_version.as_slice()),
            Err(CheckpointError::UnsupportedVersion { found: 99 })
        ));
    }

    #[test]
    fn truncated_files_are_rejected() {
        let ckpt = sample_checkpoint();
        let mut buf = Vec::new();
        ckpt.write_to(&mut buf).unwrap();
        let cut = &buf[..buf.len() / 2];
        assert!(matches!(
            ModelCheckpoint::read_from(cut),
            Err(CheckpointError::Corrupt { .. })
        ));
    }

    #[test]
    fn foreign_feature_tags_are_rejected() {
        let mut ckpt = sample_checkpoint();
        ckpt.feature_tag = "someone-elses-features".to_string();
        let mut buf = Vec::new();
        ckpt.write_to(&mut buf).unwrap();
        assert!(matches!(
            ModelCheckpoint::read_from(buf.as_slice()),
            Err(CheckpointError::FeatureTagMismatch { .. })
        ));
    }

    #[test]
    fn save_and_load_through_the_filesystem() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let ckpt = sample_checkpoint();
        ckpt.save(&path).unwrap();
        assert_eq!(ModelCheckpoint::load(&path).unwrap(), ckpt);
    }

    #[test]
    fn prediction_undoes_target_standardization() {
        let mut ckpt = sample_checkpoint();
        // zero the network: raw output 0 -> prediction = target mean
        let zeros = vec![0.0; ckpt.model.param_count()];
        ckpt.model.set_params(&zeros).unwrap();
        let img = crate::imagecore::PixelImage::filled(64, 64, [100, 150, 200]);
        let score = ckpt.predict_image(&img).unwrap();
        assert!((score - 5.5).abs() < 1e-12);
    }

    #[test]
    fn scaler_fit_standardizes_training_features() {
        let imgs = [
            crate::imagecore::PixelImage::filled(32, 32, [10, 20, 30]),
            crate::imagecore::PixelImage::filled(32, 32, [200, 180, 160]),
            crate::imagecore::PixelImage::filled(32, 32, [90, 120, 250]),
        ];
        let features: Vec<FeatureVector> = imgs
            .iter()
            .map(|i| extract_features(i).unwrap())
            .collect();
        let scaler = FeatureScaler::fit(&features).unwrap();
        // transformed features have mean ~0 per dimension
        let mut sums = vec![0.0; FEATURE_DIM];
        for f in &features {
            for (s, v) in sums.iter_mut().zip(scaler.transform(f)) {
                *s += v;
            }
        }
        for (i, s) in sums.iter().enumerate() {
            assert!(
                (s / features.len() as f64).abs() < 1e-9,
                "dimension {i} not centered"
            );
        }
    }
}
