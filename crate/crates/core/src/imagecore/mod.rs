//! Pixel-level primitives shared by every other module.
//!
//! The carrier type is [`PixelImage`], a row-major 8-bit sRGB raster. All
//! operations are pure functions of their inputs (plus any explicit RNG):
//! identical inputs produce bit-identical outputs, and nothing here touches
//! global state, so concurrent use on shared read-only images is safe.
//!
//! Internal arithmetic runs in 32-bit float and is rounded half-to-even back
//! to 8 bits at operation boundaries.

mod codec;
mod ops;
mod resize;

pub use codec::{decode, encode, format_for_path, ImageFormat, JPEG_CODEC_ID};
pub use ops::{center_crop, hflip, random_crop};
pub use resize::{fit_largest_side, fit_shorter_side, resize_bilinear};

use thiserror::Error;

/// Errors produced by raster primitives.
#[derive(Debug, Error)]
pub enum ImageError {
    #[error("malformed {format} data: {reason}")]
    MalformedFile { format: ImageFormat, reason: String },
    #[error("unsupported image format{}", match detected {
        Some(d) => format!(" (detected {d})"),
        None => String::new(),
    })]
    UnsupportedFormat { detected: Option<String> },
    #[error("JPEG quality {0} outside 1..=100")]
    QualityOutOfRange(u32),
    #[error("crop {crop_width}x{crop_height} larger than image {width}x{height}")]
    CropLargerThanImage {
        crop_width: u32,
        crop_height: u32,
        width: u32,
        height: u32,
    },
    #[error("invalid dimensions {width}x{height} for buffer of {len} bytes")]
    InvalidDimensions { width: u32, height: u32, len: usize },
}

/// A decoded 8-bit sRGB raster.
///
/// `pixels` holds `width * height` RGB triples in row-major order, so the
/// buffer length is exactly `width * height * 3`.
#[derive(Clone, PartialEq, Eq)]
pub struct PixelImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for PixelImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PixelImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish()
    }
}

impl PixelImage {
    /// Wraps an RGB buffer, checking the `width * height * 3` length invariant.
    pub fn from_rgb(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, ImageError> {
        let expected = (width as usize)
            .checked_mul(height as usize)
            .and_then(|n| n.checked_mul(3));
        if width == 0 || height == 0 || expected != Some(pixels.len()) {
            return Err(ImageError::InvalidDimensions {
                width,
                height,
                len: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// A solid-color image.
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        assert!(width >= 1 && height >= 1, "dimensions must be >= 1");
        let mut pixels = Vec::with_capacity(width as usize * height as usize * 3);
        for _ in 0..width as usize * height as usize {
            pixels.extend_from_slice(&rgb);
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Raw RGB bytes, row-major.
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    /// The RGB triple at (x, y). Panics when out of bounds.
    #[inline]
    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        debug_assert!(x < self.width && y < self.height);
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    #[inline]
    pub(crate) fn set(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    /// Mean absolute per-channel difference against another image of the same
    /// dimensions. Used to quantify distortion severity.
    pub fn mean_abs_diff(&self, other: &PixelImage) -> f64 {
        assert_eq!(
            (self.width, self.height),
            (other.width, other.height),
            "images must share dimensions"
        );
        let total: u64 = self
            .pixels
            .iter()
            .zip(&other.pixels)
            .map(|(&a, &b)| u64::from(a.abs_diff(b)))
            .sum();
        total as f64 / self.pixels.len() as f64
    }
}

/// Rounds a float channel value half-to-even and clamps it into `0..=255`.
#[inline]
pub(crate) fn quantize_channel(v: f32) -> u8 {
    v.clamp(0.0, 255.0).round_ties_even() as u8
}
