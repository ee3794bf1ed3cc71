//! PNG and baseline JPEG encode/decode on top of the `image` crate.
//!
//! The JPEG codec identity matters for reproducibility: distorted datasets
//! record [`JPEG_CODEC_ID`] in their generation metadata because JPEG output
//! bytes are codec-dependent even at a fixed quality.

use std::io::Cursor;

use image::codecs::jpeg::JpegEncoder;
use image::codecs::png::PngEncoder;
use image::{ImageEncoder, ImageReader};

use super::{ImageError, PixelImage};

/// Identity of the JPEG implementation behind [`encode`]/[`decode`].
pub const JPEG_CODEC_ID: &str = "image-rs 0.25 (zune-jpeg decode, jpeg-encoder encode)";

/// Supported container formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    Png,
    Jpeg,
}

impl std::fmt::Display for ImageFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ImageFormat::Png => write!(f, "PNG"),
            ImageFormat::Jpeg => write!(f, "JPEG"),
        }
    }
}

/// Maps a file extension (`png`, `jpg`, `jpeg`, case-insensitive) to the
/// format expected by [`decode`]. Returns `None` for anything else so callers
/// can report the path instead of guessing.
pub fn format_for_path(path: &std::path::Path) -> Option<ImageFormat> {
    let ext = path.extension()?.to_str()?.to_ascii_lowercase();
    match ext.as_str() {
        "png" => Some(ImageFormat::Png),
        "jpg" | "jpeg" => Some(ImageFormat::Jpeg),
        _ => None,
    }
}

/// Best-effort magic-number sniff, used to distinguish "recognizable but
/// unsupported format" from "corrupt data".
fn sniff(bytes: &[u8]) -> Option<&'static str> {
    const PNG: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0D, 0x0A, 0x1A, 0x0A];
    if bytes.starts_with(&PNG) {
        return Some("PNG");
    }
    if bytes.starts_with(&[0xFF, 0xD8, 0xFF]) {
        return Some("JPEG");
    }
    if bytes.starts_with(b"GIF87a") || bytes.starts_with(b"GIF89a") {
        return Some("GIF");
    }
    if bytes.starts_with(b"BM") {
        return Some("BMP");
    }
    if bytes.len() >= 12 && &bytes[0..4] == b"RIFF" && &bytes[8..12] == b"WEBP" {
        return Some("WebP");
    }
    if bytes.starts_with(&[0x49, 0x49, 0x2A, 0x00]) || bytes.starts_with(&[0x4D, 0x4D, 0x00, 0x2A])
    {
        return Some("TIFF");
    }
    None
}

/// Decodes PNG or baseline JPEG bytes into an RGB raster.
///
/// Gray, palette and alpha-carrying variants are collapsed to 8-bit RGB; there
/// is no EXIF or color-management handling beyond assuming sRGB.
pub fn decode(bytes: &[u8], format: ImageFormat) -> Result<PixelImage, ImageError> {
    match (sniff(bytes), format) {
        (Some("PNG"), ImageFormat::Png) | (Some("JPEG"), ImageFormat::Jpeg) => {}
        (Some(other), _) => {
            // Valid magic for some other container; the caller stated the
            // wrong format rather than handing over garbage.
            return Err(ImageError::UnsupportedFormat {
                detected: Some(other.to_string()),
            });
        }
        (None, _) => {
            return Err(ImageError::MalformedFile {
                format,
                reason: "missing or truncated file signature".to_string(),
            })
        }
    }

    let fmt = match format {
        ImageFormat::Png => image::ImageFormat::Png,
        ImageFormat::Jpeg => image::ImageFormat::Jpeg,
    };
    let mut reader = ImageReader::new(Cursor::new(bytes));
    reader.set_format(fmt);
    let dynamic = reader.decode().map_err(|e| ImageError::MalformedFile {
        format,
        reason: e.to_string(),
    })?;
    let rgb = dynamic.to_rgb8();
    let (w, h) = rgb.dimensions();
    PixelImage::from_rgb(w, h, rgb.into_raw())
}

/// Encodes an image as PNG (lossless, `quality` ignored) or baseline JPEG at
/// the given quality in `1..=100`.
pub fn encode(img: &PixelImage, format: ImageFormat, quality: u32) -> Result<Vec<u8>, ImageError> {
    let mut out = Vec::new();
    match format {
        ImageFormat::Png => {
            PngEncoder::new(&mut out)
                .write_image(
                    img.pixels(),
                    img.width(),
                    img.height(),
                    image::ExtendedColorType::Rgb8,
                )
                .map_err(|e| ImageError::MalformedFile {
                    format,
                    reason: e.to_string(),
                })?;
        }
        ImageFormat::Jpeg => {
            if !(1..=100).contains(&quality) {
                return Err(ImageError::QualityOutOfRange(quality));
            }
            JpegEncoder::new_with_quality(&mut out, quality as u8)
                .write_image(
                    img.pixels(),
                    img.width(),
                    img.height(),
                    image::ExtendedColorType::Rgb8,
                )
                .map_err(|e| ImageError::MalformedFile {
                    format,
                    reason: e.to_string(),
                })?;
        }
    }
    Ok(out)
}
