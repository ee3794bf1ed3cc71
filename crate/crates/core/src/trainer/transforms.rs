//! Image-to-network-input transforms.
//!
//! Training uses scale, horizontal-flip and translation jitter; evaluation is
//! deterministic. Both end in a square crop at the configured input size.

use rand_chacha::ChaCha8Rng;
use rand::Rng;

use crate::imagecore::{
    center_crop, fit_shorter_side, hflip, random_crop, resize_bilinear, ImageError, PixelImage,
};

/// Oversized resize, coin-flip mirror, then a uniformly placed square crop.
///
/// Draw order on `rng` is fixed (flip decision, crop x, crop y) so seeded
/// streams replay exactly.
pub fn train_transform(
    img: &PixelImage,
    input_size: u32,
    oversize_fraction: f64,
    rng: &mut ChaCha8Rng,
) -> Result<PixelImage, ImageError> {
    let oversized = ((1.0 + oversize_fraction) * f64::from(input_size)).round() as u32;
    let (w, h) = fit_shorter_side(img.width(), img.height(), oversized);
    let resized = resize_bilinear(img, w, h);
    let flipped = if rng.gen_bool(0.5) {
        hflip(&resized)
    } else {
        resized
    };
    random_crop(&flipped, input_size, input_size, rng)
}

/// Shorter side to `input_size`, then the centered square crop.
pub fn eval_transform(img: &PixelImage, input_size: u32) -> Result<PixelImage, ImageError> {
    let (w, h) = fit_shorter_side(img.width(), img.height(), input_size);
    let resized = resize_bilinear(img, w, h);
    center_crop(&resized, input_size, input_size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::stream_rng;

    fn gradient(w: u32, h: u32) -> PixelImage {
        let mut img = PixelImage::filled(w, h, [0, 0, 0]);
        for y in 0..h {
            for x in 0..w {
                let v = ((x * 255 / w.max(1)) % 256) as u8;
                img.set(x, y, [v, (y % 256) as u8, 128]);
            }
        }
        img
    }

    #[test]
    fn eval_output_is_square_at_input_size() {
        for (w, h) in [(512, 384), (384, 512), (224, 224), (100, 640)] {
            let out = eval_transform(&gradient(w, h), 224).unwrap();
            assert_eq!((out.width(), out.height()), (224, 224));
        }
    }

    #[test]
    fn train_output_is_square_at_input_size() {
        let img = gradient(512, 512);
        let mut rng = stream_rng(1, "augment", &[0]);
        let out = train_transform(&img, 224, 0.125, &mut rng).unwrap();
        assert_eq!((out.width(), out.height()), (224, 224));
    }

    #[test]
    fn train_transform_upscales_small_sources() {
        let img = gradient(64, 96);
        let mut rng = stream_rng(1, "augment", &[1]);
        let out = train_transform(&img, 128, 0.125, &mut rng).unwrap();
        assert_eq!((out.width(), out.height()), (128, 128));
    }

    #[test]
    fn identical_streams_replay_the_same_crop() {
        let img = gradient(300, 200);
        let a = train_transform(&img, 128, 0.125, &mut stream_rng(9, "augment", &[4])).unwrap();
        let b = train_transform(&img, 128, 0.125, &mut stream_rng(9, "augment", &[4])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_stream_indices_jitter_the_crop() {
        let img = gradient(300, 200);
        let outs: Vec<PixelImage> = (0..8)
            .map(|i| {
                train_transform(&img, 128, 0.125, &mut stream_rng(9, "augment", &[i])).unwrap()
            })
            .collect();
        assert!(outs.iter().any(|o| o != &outs[0]));
    }

    #[test]
    fn zero_oversize_pins_the_crop() {
        // With no resize overshoot on a square image there is exactly one
        // valid crop position, so only the flip can vary.
        let img = gradient(224, 224);
        let out = train_transform(&img, 224, 0.0, &mut stream_rng(3, "augment", &[0])).unwrap();
        let plain = eval_transform(&img, 224).unwrap();
        assert!(out == plain || out == hflip(&plain));
    }
}
