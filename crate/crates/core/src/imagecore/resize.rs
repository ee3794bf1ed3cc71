//! Bilinear resampling with the half-pixel-center convention.
//!
//! Output pixel centers sit at `x + 0.5`; they map into source coordinates as
//! `(x + 0.5) * w_in / w_out - 0.5`, sample coordinates clamp at the edges,
//! and channel math runs in f32 with round-half-to-even quantization. Resizing
//! to the source dimensions is exactly the identity.

use super::{quantize_channel, PixelImage};

/// Resizes with bilinear interpolation to exactly `new_width` x `new_height`.
pub fn resize_bilinear(img: &PixelImage, new_width: u32, new_height: u32) -> PixelImage {
    assert!(new_width >= 1 && new_height >= 1, "dimensions must be >= 1");
    if new_width == img.width() && new_height == img.height() {
        return img.clone();
    }

    let (w_in, h_in) = (img.width() as usize, img.height() as usize);
    let (w_out, h_out) = (new_width as usize, new_height as usize);
    let x_scale = w_in as f32 / w_out as f32;
    let y_scale = h_in as f32 / h_out as f32;

    // Precompute horizontal taps once; rows reuse them.
    let mut x_taps = Vec::with_capacity(w_out);
    for x in 0..w_out {
        let src = (x as f32 + 0.5) * x_scale - 0.5;
        let x0 = src.floor();
        let frac = src - x0;
        let left = (x0 as i64).clamp(0, w_in as i64 - 1) as usize;
        let right = (x0 as i64 + 1).clamp(0, w_in as i64 - 1) as usize;
        x_taps.push((left, right, frac));
    }

    let src_pixels = img.pixels();
    let mut out = Vec::with_capacity(w_out * h_out * 3);
    for y in 0..h_out {
        let src = (y as f32 + 0.5) * y_scale - 0.5;
        let y0 = src.floor();
        let fy = src - y0;
        let top = (y0 as i64).clamp(0, h_in as i64 - 1) as usize;
        let bottom = (y0 as i64 + 1).clamp(0, h_in as i64 - 1) as usize;
        let top_row = &src_pixels[top * w_in * 3..(top + 1) * w_in * 3];
        let bottom_row = &src_pixels[bottom * w_in * 3..(bottom + 1) * w_in * 3];
        for &(left, right, fx) in &x_taps {
            for c in 0..3 {
                let tl = top_row[left * 3 + c] as f32;
                let tr = top_row[right * 3 + c] as f32;
                let bl = bottom_row[left * 3 + c] as f32;
                let br = bottom_row[right * 3 + c] as f32;
                let t = tl + (tr - tl) * fx;
                let b = bl + (br - bl) * fx;
                out.push(quantize_channel(t + (b - t) * fy));
            }
        }
    }
    PixelImage::from_rgb(new_width, new_height, out).expect("constructed buffer matches dims")
}

/// Target dimensions after scaling so the largest side equals `target`.
pub fn fit_largest_side(width: u32, height: u32, target: u32) -> (u32, u32) {
    assert!(target >= 1);
    let scale = target as f64 / width.max(height) as f64;
    scale_dims(width, height, scale)
}

/// Target dimensions after scaling so the shorter side equals `target`.
pub fn fit_shorter_side(width: u32, height: u32, target: u32) -> (u32, u32) {
    assert!(target >= 1);
    let scale = target as f64 / width.min(height) as f64;
    scale_dims(width, height, scale)
}

fn scale_dims(width: u32, height: u32, scale: f64) -> (u32, u32) {
    let w = ((width as f64 * scale).round() as u32).max(1);
    let h = ((height as f64 * scale).round() as u32).max(1);
    (w, h)
}
