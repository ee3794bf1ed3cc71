//! Seeded procedural images and synthetic corpora.
//!
//! Nothing here is meant for production scoring; these generators exist so
//! integration tests, benchmarks and demo runs have deterministic data with
//! known structure. Two image styles are provided: band-limited value-noise
//! textures and smooth gradient-plus-shape scenes. Their feature statistics
//! differ sharply, which is exactly what cross-domain experiments need.
//!
//! Pixel values are kept inside `[64, 192]` so the stretching entries of the
//! default distortion ladder never clip, keeping distortion strength
//! monotone in the ladder's severity order.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datasets::{DatasetDescriptor, DistortionKind, ImageRecord, SplitPolicy};
use crate::distort::{generate_dataset, DistortionLadder, GenerateError};
use crate::imagecore::{encode, ImageError, ImageFormat, PixelImage};
use crate::seeding::stream_rng;

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("fixture output {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error(transparent)]
    Image(#[from] ImageError),
}

/// Which procedural generator a synthetic domain draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainStyle {
    /// Multi-octave value noise; busy at every scale.
    Texture,
    /// Smooth directional gradient with a handful of flat shapes.
    Shapes,
}

/// Smoothstep-interpolated lattice noise in `[0, 1)`.
struct ValueNoise {
    cell: f64,
    nx: usize,
    values: Vec<f64>,
}

impl ValueNoise {
    fn new(width: u32, height: u32, cell: u32, rng: &mut ChaCha8Rng) -> Self {
        let cell = cell.max(1);
        let nx = (width / cell + 2) as usize;
        let ny = (height / cell + 2) as usize;
        let values = (0..nx * ny).map(|_| rng.gen::<f64>()).collect();
        ValueNoise {
            cell: f64::from(cell),
            nx,
            values,
        }
    }

    fn at(&self, x: u32, y: u32) -> f64 {
        let gx = f64::from(x) / self.cell;
        let gy = f64::from(y) / self.cell;
        let ix = gx.floor() as usize;
        let iy = gy.floor() as usize;
        let tx = smoothstep(gx - gx.floor());
        let ty = smoothstep(gy - gy.floor());
        let v = |i: usize, j: usize| self.values[j * self.nx + i];
        let top = v(ix, iy) * (1.0 - tx) + v(ix + 1, iy) * tx;
        let bottom = v(ix, iy + 1) * (1.0 - tx) + v(ix + 1, iy + 1) * tx;
        top * (1.0 - ty) + bottom * ty
    }
}

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Maps a unit-interval value into the clip-safe `[64, 192]` band.
fn to_band(v: f64) -> u8 {
    (64.0 + v.clamp(0.0, 1.0) * 128.0).round() as u8
}

/// A colored multi-octave value-noise texture.
///
/// Octave cells at 16, 8 and 4 pixels give structure both above and below
/// the JPEG/pixelation block sizes, so every ladder family has something to
/// destroy.
pub fn value_noise_texture(width: u32, height: u32, rng: &mut ChaCha8Rng) -> PixelImage {
    let octaves = [
        (16u32, 0.5),
        (8u32, 0.3),
        (4u32, 0.2),
    ];
    let fields: Vec<(ValueNoise, f64)> = octaves
        .iter()
        .map(|&(cell, weight)| (ValueNoise::new(width, height, cell, rng), weight))
        .collect();
    let chroma = ValueNoise::new(width, height, 24, rng);

    let mut img = PixelImage::filled(width, height, [0, 0, 0]);
    for y in 0..height {
        for x in 0..width {
            let luma: f64 = fields.iter().map(|(f, w)| f.at(x, y) * w).sum();
            let tint = 0.25 * (chroma.at(x, y) - 0.5);
            img.set(
                x,
                y,
                [
                    to_band(luma + tint),
                    to_band(luma),
                    to_band(luma - tint),
                ],
            );
        }
    }
    img
}

/// A directional gradient with flat shapes and thin lines painted over it.
///
/// Shape interiors carry a light stipple and a contrasting outline, and the
/// background a faint dither, so that blurring, block coding and resampling
/// all leave a measurable footprint despite the scene's overall smoothness.
pub fn shape_scene(width: u32, height: u32, rng: &mut ChaCha8Rng) -> PixelImage {
    let angle = rng.gen::<f64>() * TAU;
    let (dx, dy) = (angle.cos(), angle.sin());
    // Per-channel gradient endpoints: the background is colored, so
    // desaturation has something to remove. The endpoint ranges are kept
    // narrow so global brightness and contrast are stable across pristine
    // scenes and intensity distortions stay identifiable.
    let lo: Vec<f64> = (0..3).map(|_| rng.gen_range(0.2..0.3)).collect();
    let hi: Vec<f64> = (0..3).map(|_| rng.gen_range(0.7..0.8)).collect();
    let diag = f64::from(width) * dx.abs() + f64::from(height) * dy.abs();
    let dither = ValueNoise::new(width, height, 3, rng);
    let stipple = ValueNoise::new(width, height, 2, rng);

    let mut img = PixelImage::filled(width, height, [0, 0, 0]);
    for y in 0..height {
        for x in 0..width {
            let proj = (f64::from(x) * dx + f64::from(y) * dy
                + f64::from(if dx < 0.0 { width } else { 0 }) * -dx
                + f64::from(if dy < 0.0 { height } else { 0 }) * -dy)
                / diag;
            let t = proj.clamp(0.0, 1.0);
            let noise = 0.04 * (dither.at(x, y) - 0.5);
            let mut rgb = [0u8; 3];
            for c in 0..3 {
                rgb[c] = to_band(lo[c] + (hi[c] - lo[c]) * t + noise);
            }
            img.set(x, y, rgb);
        }
    }

    for _ in 0..rng.gen_range(3..=5) {
        let value = rng.gen_range(0.3..0.7);
        let tint = rng.gen_range(-0.2..0.2);
        let edge = if value < 0.5 { value + 0.25 } else { value - 0.25 };
        let cx = rng.gen_range(0..width) as i64;
        let cy = rng.gen_range(0..height) as i64;
        let half = rng.gen_range(width / 12..width / 4).max(3) as i64;
        let circular = rng.gen_bool(0.5);
        let x0 = (cx - half).max(0) as u32;
        let x1 = ((cx + half) as u32).min(width - 1);
        let y0 = (cy - half).max(0) as u32;
        let y1 = ((cy + half) as u32).min(height - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let ddx = x as i64 - cx;
                let ddy = y as i64 - cy;
                let inside = if circular {
                    ddx * ddx + ddy * ddy <= half * half
                } else {
                    true
                };
                if !inside {
                    continue;
                }
                let on_edge = if circular {
                    let r2 = ddx * ddx + ddy * ddy;
                    r2 >= (half - 2) * (half - 2)
                } else {
                    ddx.abs() >= half - 2 || ddy.abs() >= half - 2
                };
                let v = if on_edge {
                    edge
                } else {
                    value + 0.1 * (stipple.at(x, y) - 0.5)
                };
                img.set(
                    x,
                    y,
                    [to_band(v + tint), to_band(v), to_band(v - tint)],
                );
            }
        }
    }

    // A few thin full-width strokes; their high-frequency energy is the
    // first casualty of blur and resampling.
    for _ in 0..rng.gen_range(2..=4) {
        let v = rng.gen_range(0.05..0.95);
        let rgb = [to_band(v), to_band(v), to_band(v)];
        if rng.gen_bool(0.5) {
            let y = rng.gen_range(0..height);
            let slope = rng.gen_range(-0.3..0.3);
            for x in 0..width {
                let yy = (f64::from(y) + slope * f64::from(x)).rem_euclid(f64::from(height)) as u32;
                img.set(x, yy.min(height - 1), rgb);
            }
        } else {
            let x = rng.gen_range(0..width);
            let slope = rng.gen_range(-0.3..0.3);
            for y in 0..height {
                let xx = (f64::from(x) + slope * f64::from(y)).rem_euclid(f64::from(width)) as u32;
                img.set(xx.min(width - 1), y, rgb);
            }
        }
    }
    img
}

/// One image in the given style.
pub fn domain_image(style: DomainStyle, width: u32, height: u32, rng: &mut ChaCha8Rng) -> PixelImage {
    match style {
        DomainStyle::Texture => value_noise_texture(width, height, rng),
        DomainStyle::Shapes => shape_scene(width, height, rng),
    }
}

/// A deterministic set of textured images, one independent stream each.
pub fn textured_set(count: usize, width: u32, height: u32, seed: u64) -> Vec<PixelImage> {
    (0..count)
        .map(|i| {
            value_noise_texture(
                width,
                height,
                &mut stream_rng(seed, "texture", &[i as u64]),
            )
        })
        .collect()
}

/// Synthetic opinion score on the harmonized scale: affine in distortion
/// severity (`0` pristine, `1` worst of a family) plus Gaussian noise with
/// standard deviation 0.3, clamped to `[1, 10]`.
pub fn pseudo_mos(severity: f64, rng: &mut ChaCha8Rng) -> f64 {
    let clean = 9.5 - 7.5 * severity.clamp(0.0, 1.0);
    (clean + 0.3 * standard_normal(rng)).clamp(1.0, 10.0)
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = rng.gen::<f64>().max(1e-300);
    let u2 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
}

/// A synthetic dataset ready to merge into an experiment.
#[derive(Debug)]
pub struct SyntheticDomain {
    pub descriptor: DatasetDescriptor,
    pub records: Vec<ImageRecord>,
}

/// Writes a fully expanded synthetic domain under `out_dir`.
///
/// `pristine_count` source images of the given style are written to
/// `out_dir/pristine`, expanded through the ladder into `out_dir/expanded`,
/// and every row (pristine included) gets a severity-driven [`pseudo_mos`]
/// score on the harmonized scale. The result is deterministic in `seed`.
#[allow(clippy::too_many_arguments)]
pub fn write_synthetic_domain(
    name: &str,
    style: DomainStyle,
    pristine_count: usize,
    width: u32,
    height: u32,
    policy: SplitPolicy,
    ladder: &DistortionLadder,
    seed: u64,
    out_dir: &Path,
) -> Result<SyntheticDomain, FixtureError> {
    let pristine_dir = out_dir.join("pristine");
    std::fs::create_dir_all(&pristine_dir).map_err(|e| FixtureError::Io {
        path: pristine_dir.clone(),
        message: e.to_string(),
    })?;

    let mut pristine = Vec::with_capacity(pristine_count);
    for i in 0..pristine_count {
        let id = format!("{name}-p{i:03}");
        let img = domain_image(
            style,
            width,
            height,
            &mut stream_rng(seed, &format!("image:{name}"), &[i as u64]),
        );
        let path = pristine_dir.join(format!("{id}.png"));
        let bytes = encode(&img, ImageFormat::Png, 0)?;
        std::fs::write(&path, bytes).map_err(|e| FixtureError::Io {
            path: path.clone(),
            message: e.to_string(),
        })?;
        pristine.push(ImageRecord {
            id,
            subject_id: format!("p{i:03}"),
            path,
            source: name.to_string(),
            family: None,
            level: None,
            mos: None,
            native_min: None,
            native_max: None,
        });
    }

    let mut records = generate_dataset(&pristine, ladder, &out_dir.join("expanded"))?;
    let mut mos_rng = stream_rng(seed, &format!("mos:{name}"), &[]);
    for record in &mut records {
        let severity = match (record.family, record.level) {
            (Some(family), Some(level)) => ladder
                .specs()
                .iter()
                .find(|s| s.family == family && s.level == level)
                .and_then(|s| ladder.severity_fraction(s))
                .unwrap_or(1.0),
            _ => 0.0,
        };
        record.mos = Some(pseudo_mos(severity, &mut mos_rng));
        record.native_min = Some(1.0);
        record.native_max = Some(10.0);
    }

    Ok(SyntheticDomain {
        descriptor: DatasetDescriptor::new(name, (1.0, 10.0), DistortionKind::Artificial, policy),
        records,
    })
}

/// Manifest-only artificial corpus: `subject_count` subjects, each with one
/// pristine row and one row per ladder entry, scored like
/// [`write_synthetic_domain`] but with no pixels behind the paths.
///
/// Useful wherever only ids, subjects and scores matter, such as split and
/// leakage checks.
pub fn artificial_corpus_records(
    name: &str,
    subject_count: usize,
    ladder: &DistortionLadder,
    seed: u64,
) -> Vec<ImageRecord> {
    let mut rng = stream_rng(seed, &format!("mos:{name}"), &[]);
    let mut records = Vec::with_capacity(subject_count * (ladder.len() + 1));
    for s in 0..subject_count {
        let subject = format!("subj{s:03}");
        let base = format!("{name}-{subject}");
        records.push(ImageRecord {
            id: base.clone(),
            subject_id: subject.clone(),
            path: PathBuf::from(format!("mem://{name}/{base}.png")),
            source: name.to_string(),
            family: None,
            level: None,
            mos: Some(pseudo_mos(0.0, &mut rng)),
            native_min: Some(1.0),
            native_max: Some(10.0),
        });
        for spec in ladder.specs() {
            let id = format!("{base}__{}_l{}", spec.family, spec.level);
            records.push(ImageRecord {
                id: id.clone(),
                subject_id: subject.clone(),
                path: PathBuf::from(format!("mem://{name}/{id}.png")),
                source: name.to_string(),
                family: Some(spec.family),
                level: Some(spec.level),
                mos: Some(pseudo_mos(
                    ladder.severity_fraction(spec).unwrap_or(1.0),
                    &mut rng,
                )),
                native_min: Some(1.0),
                native_max: Some(10.0),
            });
        }
    }
    records
}
