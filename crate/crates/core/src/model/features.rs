//! Engineered perceptual features.
//!
//! A fixed 34-dimensional descriptor of natural-scene statistics known to
//! track common degradations: mean-subtracted contrast-normalized (MSCN)
//! coefficient moments at two scales, gradient and Laplacian energy, JPEG
//! blocking strength, and global color/luminance statistics. All math is
//! `f64` so gradient checks against this pipeline stay meaningful.
//!
//! Slot layout (indices into [`FeatureVector::as_slice`]):
//!
//! | index | feature                                            |
//! |-------|----------------------------------------------------|
//! | 0-3   | MSCN mean / variance / skewness / excess kurtosis  |
//! | 4-7   | the same after 2x2 box downsampling                |
//! | 8-9   | gradient magnitude mean / variance                 |
//! | 10    | Laplacian response variance                        |
//! | 11-12 | JPEG blockiness, horizontal / vertical (period 8)  |
//! | 13-15 | channel means (R, G, B)                            |
//! | 16-18 | channel standard deviations (R, G, B)              |
//! | 19-20 | saturation mean / standard deviation               |
//! | 21-23 | luminance percentiles p5 / p50 / p95               |
//! | 24    | RMS contrast                                       |
//! | 25    | colorfulness                                       |
//! | 26-27 | MSCN neighbor product mean, horizontal / vertical  |
//! | 28    | re-blur gradient ratio                             |
//! | 29    | flat-pixel fraction                                |
//! | 30    | cross-scale MSCN variance log ratio                |
//! | 31-33 | reserved, always zero                              |
//!
//! MSCN uses the luminance plane on the [0, 255] scale with a 7x7 Gaussian
//! window (sigma 7/6) and reflect padding; every other feature works on
//! [0, 1] channel values.

use crate::imagecore::PixelImage;

use super::ModelError;

/// Identifies this extractor in checkpoints; bump when the layout or any
/// formula changes.
pub const FEATURE_TAG: &str = "engineered-34-v2";

/// Number of feature slots, including the reserved zeros.
pub const FEATURE_DIM: usize = 34;

/// Minimum image side length for a meaningful descriptor.
pub const MIN_SIDE: u32 = 32;

/// One extracted descriptor; always [`FEATURE_DIM`] finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: [f64; FEATURE_DIM],
}

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// BT.601 luma of one 8-bit pixel, still on the [0, 255] scale.
fn luma(px: &[u8]) -> f64 {
    0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64
}

/// Computes the descriptor. Deterministic, pixel data only.
pub fn extract_features(img: &PixelImage) -> Result<FeatureVector, ModelError> {
    if img.width() < MIN_SIDE || img.height() < MIN_SIDE {
        return Err(ModelError::ImageTooSmall {
            width: img.width(),
            height: img.height(),
        });
    }
    let w = img.width() as usize;
    let h = img.height() as usize;

    let luminance255: Vec<f64> = img.pixels().chunks_exact(3).map(luma).collect();
    let luminance: Vec<f64> = luminance255.iter().map(|v| v / 255.0).collect();

    let mut values = [0.0f64; FEATURE_DIM];

    let coeffs1 = mscn_coefficients(&luminance255, w, h);
    let mscn1 = four_moments(&coeffs1);
    values[0..4].copy_from_slice(&mscn1);
    let (half, hw, hh) = box_downsample(&luminance255, w, h);
    let mscn2 = four_moments(&mscn_coefficients(&half, hw, hh));
    values[4..8].copy_from_slice(&mscn2);

    let (grad_mean, grad_var, flat) = gradient_stats(&luminance, w, h);
    values[8] = grad_mean;
    values[9] = grad_var;
    values[10] = laplacian_variance(&luminance, w, h);

    values[11] = blockiness(&luminance, w, h, Axis::Horizontal);
    values[12] = blockiness(&luminance, w, h, Axis::Vertical);

    for c in 0..3 {
        let channel: Vec<f64> = img
            .pixels()
            .chunks_exact(3)
            .map(|px| px[c] as f64 / 255.0)
            .collect();
        let (mean, var) = mean_var(&channel);
        values[13 + c] = mean;
        values[16 + c] = var.sqrt();
    }

    let saturation: Vec<f64> = img
        .pixels()
        .chunks_exact(3)
        .map(|px| {
            let max = px.iter().copied().max().unwrap() as f64;
            let min = px.iter().copied().min().unwrap() as f64;
            (max - min) / 255.0
        })
        .collect();
    let (sat_mean, sat_var) = mean_var(&saturation);
    values[19] = sat_mean;
    values[20] = sat_var.sqrt();

    let mut sorted = luminance.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    values[21] = percentile(&sorted, 0.05);
    values[22] = percentile(&sorted, 0.50);
    values[23] = percentile(&sorted, 0.95);

    let (_, lum_var) = mean_var(&luminance);
    values[24] = lum_var.sqrt();
    values[25] = colorfulness(img);

    let (prod_h, prod_v) = mscn_neighbor_products(&coeffs1, w, h);
    values[26] = prod_h;
    values[27] = prod_v;

    // Gradient energy left after an extra smoothing pass, relative to the
    // original: near 1 on already-smooth input, small on sharp detail.
    let reblurred = separable_filter(&luminance, w, h, &gaussian_kernel_7());
    let (reblur_grad, _, _) = gradient_stats(&reblurred, w, h);
    values[28] = (reblur_grad + 1e-6) / (grad_mean + 1e-6);

    values[29] = flat;
    values[30] = ((mscn2[1] + 1e-6) / (mscn1[1] + 1e-6)).ln();

    debug_assert!(values.iter().all(|v| v.is_finite()));
    Ok(FeatureVector { values })
}

/// MSCN coefficients `(I - mu) / (sigma + 1)`, where `mu`/`sigma` are 7x7
/// Gaussian-weighted local statistics of the [0, 255] luminance plane.
fn mscn_coefficients(plane: &[f64], w: usize, h: usize) -> Vec<f64> {
    let kernel = gaussian_kernel_7();
    let mu = separable_filter(plane, w, h, &kernel);
    let sq: Vec<f64> = plane.iter().map(|v| v * v).collect();
    let musq = separable_filter(&sq, w, h, &kernel);

    let mut coeffs = Vec::with_capacity(plane.len());
    for i in 0..plane.len() {
        let sigma = (musq[i] - mu[i] * mu[i]).max(0.0).sqrt();
        coeffs.push((plane[i] - mu[i]) / (sigma + 1.0));
    }
    coeffs
}

/// Mean products of horizontally and vertically adjacent MSCN coefficients.
/// Natural detail keeps them moderately positive; smoothing that erases the
/// detail drives them toward zero, while ringing and blocking perturb them.
fn mscn_neighbor_products(coeffs: &[f64], w: usize, h: usize) -> (f64, f64) {
    let mut horizontal = 0.0;
    for y in 0..h {
        for x in 0..w - 1 {
            horizontal += coeffs[y * w + x] * coeffs[y * w + x + 1];
        }
    }
    let mut vertical = 0.0;
    for y in 0..h - 1 {
        for x in 0..w {
            vertical += coeffs[y * w + x] * coeffs[(y + 1) * w + x];
        }
    }
    (
        horizontal / (h * (w - 1)) as f64,
        vertical / ((h - 1) * w) as f64,
    )
}

/// Normalized 7-tap Gaussian, sigma = 7/6.
fn gaussian_kernel_7() -> [f64; 7] {
    let sigma = 7.0 / 6.0;
    let mut k = [0.0; 7];
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - 3.0;
        *v = (-d * d / (2.0 * sigma * sigma)).exp();
    }
    let sum: f64 = k.iter().sum();
    k.map(|v| v / sum)
}

/// Reflected index with edge duplication, matching the blur convention used
/// in the distortion pipeline.
fn reflect(i: isize, n: isize) -> usize {
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

fn separable_filter(plane: &[f64], w: usize, h: usize, kernel: &[f64; 7]) -> Vec<f64> {
    let hi = h as isize;
    let mut tmp = vec![0.0; plane.len()];
    for y in 0..h {
        filter_row(&plane[y * w..y * w + w], &mut tmp[y * w..y * w + w], kernel);
    }
    // Vertical pass as per-tap row accumulation; same tap order as a
    // per-pixel loop, so the floating-point result is identical.
    let mut out = vec![0.0; plane.len()];
    for (ki, &k) in kernel.iter().enumerate() {
        let d = ki as isize - 3;
        for y in 0..hi {
            let sy = reflect(y + d, hi);
            let src = &tmp[sy * w..sy * w + w];
            let dst = &mut out[y as usize * w..y as usize * w + w];
            for (o, s) in dst.iter_mut().zip(src) {
                *o += k * s;
            }
        }
    }
    out
}

/// One horizontal 7-tap pass; only the three pixels at either border need
/// reflected indexing.
fn filter_row(row: &[f64], out: &mut [f64], kernel: &[f64; 7]) {
    let w = row.len();
    let wi = w as isize;
    let border = |x: isize| -> f64 {
        let mut acc = 0.0;
        for (ki, k) in kernel.iter().enumerate() {
            acc += k * row[reflect(x + ki as isize - 3, wi)];
        }
        acc
    };
    if w < 7 {
        for x in 0..wi {
            out[x as usize] = border(x);
        }
        return;
    }
    for x in 0..3 {
        out[x as usize] = border(x);
    }
    for x in 3..w - 3 {
        let s = &row[x - 3..x + 4];
        out[x] = kernel[0] * s[0]
            + kernel[1] * s[1]
            + kernel[2] * s[2]
            + kernel[3] * s[3]
            + kernel[4] * s[4]
            + kernel[5] * s[5]
            + kernel[6] * s[6];
    }
    for x in (w - 3) as isize..wi {
        out[x as usize] = border(x);
    }
}

/// 2x2 box mean over the plane, truncating odd edges.
fn box_downsample(plane: &[f64], w: usize, h: usize) -> (Vec<f64>, usize, usize) {
    let (hw, hh) = (w / 2, h / 2);
    let mut out = Vec::with_capacity(hw * hh);
    for y in 0..hh {
        for x in 0..hw {
            let s = plane[2 * y * w + 2 * x]
                + plane[2 * y * w + 2 * x + 1]
                + plane[(2 * y + 1) * w + 2 * x]
                + plane[(2 * y + 1) * w + 2 * x + 1];
            out.push(s / 4.0);
        }
    }
    (out, hw, hh)
}

fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

/// Mean, population variance, skewness, excess kurtosis. The shape moments
/// collapse to zero on (near-)constant input instead of dividing by ~0.
fn four_moments(values: &[f64]) -> [f64; 4] {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for v in values {
        let d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if m2 <= 1e-12 {
        return [mean, m2, 0.0, 0.0];
    }
    [mean, m2, m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0]
}

/// Mean and variance of the central-difference gradient magnitude over
/// interior pixels, plus the fraction with magnitude below 1e-3 (flat
/// pixels, which grow under blur and pixelation).
fn gradient_stats(plane: &[f64], w: usize, h: usize) -> (f64, f64, f64) {
    let mut mags = Vec::with_capacity((w - 2) * (h - 2));
    let mut flat = 0usize;
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let gx = (plane[y * w + x + 1] - plane[y * w + x - 1]) / 2.0;
            let gy = (plane[(y + 1) * w + x] - plane[(y - 1) * w + x]) / 2.0;
            let mag = (gx * gx + gy * gy).sqrt();
            if mag < 1e-3 {
                flat += 1;
            }
            mags.push(mag);
        }
    }
    let (mean, var) = mean_var(&mags);
    (mean, var, flat as f64 / mags.len() as f64)
}

/// Variance of the 4-neighbor Laplacian over interior pixels; a sharpness
/// proxy that drops under blur.
fn laplacian_variance(plane: &[f64], w: usize, h: usize) -> f64 {
    let mut responses = Vec::with_capacity((w - 2) * (h - 2));
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let r = plane[y * w + x - 1]
                + plane[y * w + x + 1]
                + plane[(y - 1) * w + x]
                + plane[(y + 1) * w + x]
                - 4.0 * plane[y * w + x];
            responses.push(r);
        }
    }
    mean_var(&responses).1
}

enum Axis {
    Horizontal,
    Vertical,
}

/// Signed blocking strength at period 8: mean absolute neighbor difference
/// across 8-aligned block boundaries minus the same statistic elsewhere.
/// Positive values indicate visible block edges.
fn blockiness(plane: &[f64], w: usize, h: usize, axis: Axis) -> f64 {
    let mut boundary = (0.0, 0usize);
    let mut interior = (0.0, 0usize);
    match axis {
        Axis::Horizontal => {
            for y in 0..h {
                for x in 0..w - 1 {
                    let d = (plane[y * w + x + 1] - plane[y * w + x]).abs();
                    let acc = if x % 8 == 7 { &mut boundary } else { &mut interior };
                    acc.0 += d;
                    acc.1 += 1;
                }
            }
        }
        Axis::Vertical => {
            for y in 0..h - 1 {
                for x in 0..w {
                    let d = (plane[(y + 1) * w + x] - plane[y * w + x]).abs();
                    let acc = if y % 8 == 7 { &mut boundary } else { &mut interior };
                    acc.0 += d;
                    acc.1 += 1;
                }
            }
        }
    }
    if boundary.1 == 0 || interior.1 == 0 {
        return 0.0;
    }
    boundary.0 / boundary.1 as f64 - interior.0 / interior.1 as f64
}

/// Linear-interpolated percentile of pre-sorted values at `q * (n - 1)`.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo + 1 >= sorted.len() {
        sorted[lo]
    } else {
        sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac
    }
}

/// Opponent-channel colorfulness: combined spread and magnitude of `R - G`
/// and `(R + G)/2 - B` on [0, 1] channels.
fn colorfulness(img: &PixelImage) -> f64 {
    let mut rg = Vec::with_capacity(img.pixels().len() / 3);
    let mut yb = Vec::with_capacity(img.pixels().len() / 3);
    for px in img.pixels().chunks_exact(3) {
        let (r, g, b) = (
            px[0] as f64 / 255.0,
            px[1] as f64 / 255.0,
            px[2] as f64 / 255.0,
        );
        rg.push(r - g);
        yb.push((r + g) / 2.0 - b);
    }
    let (rg_mean, rg_var) = mean_var(&rg);
    let (yb_mean, yb_var) = mean_var(&yb);
    (rg_var + yb_var).sqrt() + 0.3 * (rg_mean * rg_mean + yb_mean * yb_mean).sqrt()
}
