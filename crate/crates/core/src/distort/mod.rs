//! Artificial distortion synthesis.
//!
//! A [`DistortionLadder`] is an ordered list of parametrized distortions; the
//! default ladder has 18 entries across seven families (3 JPEG, 1 blur,
//! 2 pixelation, 3 sharpen, 4 brightness, 2 color, 3 contrast), so expanding a
//! pristine set multiplies it by 19 including the originals. Every family is
//! deterministic; [`apply`] never changes image dimensions.

mod generate;
mod ladder;

pub use generate::{expand_pristine, generate_dataset, GenerateError, GenerationMeta};
pub use ladder::{DistortionLadder, LadderParseError};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imagecore::{self, quantize_channel, ImageFormat, PixelImage};

/// The seven distortion families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistortionFamily {
    JpegCompression,
    GaussianBlur,
    Pixelation,
    Sharpen,
    Brightness,
    Color,
    Contrast,
}

impl DistortionFamily {
    pub const ALL: [DistortionFamily; 7] = [
        DistortionFamily::JpegCompression,
        DistortionFamily::GaussianBlur,
        DistortionFamily::Pixelation,
        DistortionFamily::Sharpen,
        DistortionFamily::Brightness,
        DistortionFamily::Color,
        DistortionFamily::Contrast,
    ];

    /// The snake_case name used in manifests and file names.
    pub fn as_str(&self) -> &'static str {
        match self {
            DistortionFamily::JpegCompression => "jpeg_compression",
            DistortionFamily::GaussianBlur => "gaussian_blur",
            DistortionFamily::Pixelation => "pixelation",
            DistortionFamily::Sharpen => "sharpen",
            DistortionFamily::Brightness => "brightness",
            DistortionFamily::Color => "color",
            DistortionFamily::Contrast => "contrast",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        DistortionFamily::ALL.into_iter().find(|f| f.as_str() == s)
    }
}

impl std::fmt::Display for DistortionFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One parametrized distortion instance.
///
/// `level` is the 1-based index within the family's ladder; `parameter`
/// semantics depend on the family (JPEG quality, blur sigma, pixelation block
/// size, sharpen amount, brightness gain, saturation factor, contrast factor).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionSpec {
    pub family: DistortionFamily,
    pub level: u8,
    pub parameter: f32,
}

impl DistortionSpec {
    pub fn new(family: DistortionFamily, level: u8, parameter: f32) -> Self {
        Self {
            family,
            level,
            parameter,
        }
    }

    /// Checks the parameter against its family's domain.
    pub fn validate(&self) -> Result<(), DistortError> {
        let ok = self.level >= 1
            && self.parameter.is_finite()
            && match self.family {
                DistortionFamily::JpegCompression => {
                    self.parameter.fract() == 0.0 && (1.0..=100.0).contains(&self.parameter)
                }
                DistortionFamily::GaussianBlur => self.parameter > 0.0,
                DistortionFamily::Pixelation => {
                    self.parameter.fract() == 0.0 && self.parameter >= 1.0
                }
                DistortionFamily::Sharpen => self.parameter >= 0.0,
                DistortionFamily::Brightness => self.parameter > 0.0,
                DistortionFamily::Color => self.parameter >= 0.0,
                DistortionFamily::Contrast => self.parameter > 0.0,
            };
        if ok {
            Ok(())
        } else {
            Err(DistortError::InvalidSpec {
                family: self.family,
                level: self.level,
                parameter: self.parameter,
            })
        }
    }
}

#[derive(Debug, Error)]
pub enum DistortError {
    #[error("invalid distortion spec: {family} level {level} parameter {parameter}")]
    InvalidSpec {
        family: DistortionFamily,
        level: u8,
        parameter: f32,
    },
    #[error(transparent)]
    Image(#[from] imagecore::ImageError),
}

/// Applies one distortion. Deterministic; the output has the input dimensions.
pub fn apply(img: &PixelImage, spec: &DistortionSpec) -> Result<PixelImage, DistortError> {
    spec.validate()?;
    let out = match spec.family {
        DistortionFamily::JpegCompression => {
            let bytes = imagecore::encode(img, ImageFormat::Jpeg, spec.parameter as u32)?;
            imagecore::decode(&bytes, ImageFormat::Jpeg)?
        }
        DistortionFamily::GaussianBlur => {
            let planes = gaussian_blur_planes(img, spec.parameter);
            planes_to_image(img.width(), img.height(), &planes)
        }
        DistortionFamily::Pixelation => pixelate(img, spec.parameter as u32),
        DistortionFamily::Sharpen => {
            let blurred = gaussian_blur_planes(img, 1.5);
            let amount = spec.parameter;
            map_with_planes(img, &blurred, |orig, blur| orig + amount * (orig - blur))
        }
        DistortionFamily::Brightness => {
            let gain = spec.parameter;
            map_channels(img, |v| gain * v)
        }
        DistortionFamily::Color => saturate(img, spec.parameter),
        DistortionFamily::Contrast => {
            let factor = spec.parameter;
            map_channels(img, |v| 128.0 + factor * (v - 128.0))
        }
    };
    debug_assert_eq!((out.width(), out.height()), (img.width(), img.height()));
    Ok(out)
}

fn map_channels(img: &PixelImage, f: impl Fn(f32) -> f32) -> PixelImage {
    let out: Vec<u8> = img
        .pixels()
        .iter()
        .map(|&v| quantize_channel(f(v as f32)))
        .collect();
    PixelImage::from_rgb(img.width(), img.height(), out).expect("same dims")
}

/// Saturation scaling about BT.601 luma: `out = Y + s * (in - Y)`.
fn saturate(img: &PixelImage, s: f32) -> PixelImage {
    let mut out = Vec::with_capacity(img.pixels().len());
    for px in img.pixels().chunks_exact(3) {
        let (r, g, b) = (px[0] as f32, px[1] as f32, px[2] as f32);
        let y = 0.299 * r + 0.587 * g + 0.114 * b;
        out.push(quantize_channel(y + s * (r - y)));
        out.push(quantize_channel(y + s * (g - y)));
        out.push(quantize_channel(y + s * (b - y)));
    }
    PixelImage::from_rgb(img.width(), img.height(), out).expect("same dims")
}

/// Box-averages `block` x `block` cells and writes each cell's rounded mean
/// back to every pixel of the cell (downscale + nearest-neighbor upscale).
/// Partial cells at the right/bottom edges average over their actual extent.
fn pixelate(img: &PixelImage, block: u32) -> PixelImage {
    let (w, h) = (img.width(), img.height());
    let mut out = img.clone();
    let mut by = 0;
    while by < h {
        let bh = block.min(h - by);
        let mut bx = 0;
        while bx < w {
            let bw = block.min(w - bx);
            let mut sums = [0.0f32; 3];
            for y in by..by + bh {
                for x in bx..bx + bw {
                    let px = img.get(x, y);
                    for c in 0..3 {
                        sums[c] += px[c] as f32;
                    }
                }
            }
            let n = (bw * bh) as f32;
            let mean = [
                quantize_channel(sums[0] / n),
                quantize_channel(sums[1] / n),
                quantize_channel(sums[2] / n),
            ];
            for y in by..by + bh {
                for x in bx..bx + bw {
                    out.set(x, y, mean);
                }
            }
            bx += block;
        }
        by += block;
    }
    out
}

/// Reflected index for symmetric padding with edge duplication
/// (`dcba|abcd|dcba`).
#[inline]
fn reflect(i: i64, n: i64) -> usize {
    let mut i = i;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

/// Separable Gaussian blur over the three channels, kept in f32. Kernel radius
/// is `ceil(3 * sigma)`; borders use reflect padding.
fn gaussian_blur_planes(img: &PixelImage, sigma: f32) -> [Vec<f32>; 3] {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut kernel = Vec::with_capacity(2 * radius as usize + 1);
    for i in -radius..=radius {
        kernel.push((-(i as f32).powi(2) / (2.0 * sigma * sigma)).exp());
    }
    let norm: f32 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= norm;
    }

    let (w, h) = (img.width() as i64, img.height() as i64);
    let mut planes: [Vec<f32>; 3] = [
        vec![0.0; (w * h) as usize],
        vec![0.0; (w * h) as usize],
        vec![0.0; (w * h) as usize],
    ];
    for (i, px) in img.pixels().chunks_exact(3).enumerate() {
        for c in 0..3 {
            planes[c][i] = px[c] as f32;
        }
    }

    for plane in &mut planes {
        // horizontal pass
        let mut tmp = vec![0.0f32; (w * h) as usize];
        for y in 0..h {
            let row = &plane[(y * w) as usize..((y + 1) * w) as usize];
            for x in 0..w {
                let mut acc = 0.0;
                for (ki, k) in kernel.iter().enumerate() {
                    let sx = reflect(x + ki as i64 - radius, w);
                    acc += k * row[sx];
                }
                tmp[(y * w + x) as usize] = acc;
            }
        }
        // vertical pass
        for x in 0..w {
            for y in 0..h {
                let mut acc = 0.0;
                for (ki, k) in kernel.iter().enumerate() {
                    let sy = reflect(y + ki as i64 - radius, h);
                    acc += k * tmp[sy * w as usize + x as usize];
                }
                plane[(y * w + x) as usize] = acc;
            }
        }
    }
    planes
}

fn planes_to_image(w: u32, h: u32, planes: &[Vec<f32>; 3]) -> PixelImage {
    let mut out = Vec::with_capacity(w as usize * h as usize * 3);
    for i in 0..(w as usize * h as usize) {
        for plane in planes {
            out.push(quantize_channel(plane[i]));
        }
    }
    PixelImage::from_rgb(w, h, out).expect("same dims")
}

fn map_with_planes(
    img: &PixelImage,
    planes: &[Vec<f32>; 3],
    f: impl Fn(f32, f32) -> f32,
) -> PixelImage {
    let mut out = Vec::with_capacity(img.pixels().len());
    for (i, px) in img.pixels().chunks_exact(3).enumerate() {
        for c in 0..3 {
            out.push(quantize_channel(f(px[c] as f32, planes[c][i])));
        }
    }
    PixelImage::from_rgb(img.width(), img.height(), out).expect("same dims")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_image() -> PixelImage {
        let mut img = PixelImage::filled(8, 8, [0, 0, 0]);
        for y in 0..8 {
            for x in 0..8 {
                img.set(
                    x,
                    y,
                    [
                        (x * 30 + 40) as u8,
                        (y * 25 + 50) as u8,
                        ((x + y) * 14 + 30) as u8,
                    ],
                );
            }
        }
        img
    }

    #[test]
    fn brightness_unit_gain_is_identity() {
        let img = test_image();
        let spec = DistortionSpec::new(DistortionFamily::Brightness, 1, 1.0);
        assert_eq!(apply(&img, &spec).unwrap(), img);
    }

    #[test]
    fn zero_saturation_yields_grayscale() {
        let img = test_image();
        let spec = DistortionSpec::new(DistortionFamily::Color, 1, 0.0);
        let out = apply(&img, &spec).unwrap();
        for px in out.pixels().chunks_exact(3) {
            assert_eq!(px[0], px[1]);
            assert_eq!(px[1], px[2]);
        }
    }

    #[test]
    fn pixelation_block2_matches_hand_oracle() {
        // 4x4 single-gradient image; every 2x2 block becomes its rounded mean.
        let vals: [[u8; 4]; 4] = [
            [10, 20, 30, 40],
            [50, 60, 70, 80],
            [90, 100, 110, 120],
            [130, 140, 150, 160],
        ];
        let mut img = PixelImage::filled(4, 4, [0, 0, 0]);
        for y in 0..4 {
            for x in 0..4 {
                let v = vals[y as usize][x as usize];
                img.set(x, y, [v, v, v]);
            }
        }
        let spec = DistortionSpec::new(DistortionFamily::Pixelation, 1, 2.0);
        let out = apply(&img, &spec).unwrap();
        let expected: [[u8; 4]; 4] = [
            [35, 35, 55, 55],
            [35, 35, 55, 55],
            [115, 115, 135, 135],
            [115, 115, 135, 135],
        ];
        for y in 0..4 {
            for x in 0..4 {
                assert_eq!(out.get(x, y)[0], expected[y as usize][x as usize]);
            }
        }
    }

    #[test]
    fn apply_preserves_dimensions_for_all_families() {
        let img = test_image();
        for spec in DistortionLadder::default().specs() {
            let out = apply(&img, spec).unwrap();
            assert_eq!((out.width(), out.height()), (8, 8), "family {}", spec.family);
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let img = test_image();
        let bad = [
            DistortionSpec::new(DistortionFamily::JpegCompression, 1, 0.0),
            DistortionSpec::new(DistortionFamily::JpegCompression, 1, 40.5),
            DistortionSpec::new(DistortionFamily::GaussianBlur, 1, 0.0),
            DistortionSpec::new(DistortionFamily::Pixelation, 1, 2.5),
            DistortionSpec::new(DistortionFamily::Brightness, 0, 1.0),
            DistortionSpec::new(DistortionFamily::Contrast, 1, f32::NAN),
        ];
        for spec in bad {
            assert!(matches!(
                apply(&img, &spec),
                Err(DistortError::InvalidSpec { .. })
            ));
        }
    }

    #[test]
    fn blur_is_mass_preserving_on_constant_images() {
        let img = PixelImage::filled(16, 16, [77, 140, 200]);
        let spec = DistortionSpec::new(DistortionFamily::GaussianBlur, 1, 3.0);
        assert_eq!(apply(&img, &spec).unwrap(), img);
    }

    #[test]
    fn sharpen_zero_amount_is_identity() {
        let img = test_image();
        let spec = DistortionSpec::new(DistortionFamily::Sharpen, 1, 0.0);
        assert_eq!(apply(&img, &spec).unwrap(), img);
    }

    #[test]
    fn contrast_moves_values_about_mid_gray() {
        let img = PixelImage::filled(4, 4, [28, 128, 228]);
        let spec = DistortionSpec::new(DistortionFamily::Contrast, 1, 0.5);
        let out = apply(&img, &spec).unwrap();
        assert_eq!(out.get(0, 0), [78, 128, 178]);
    }
}
