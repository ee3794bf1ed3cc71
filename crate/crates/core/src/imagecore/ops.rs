//! Crops and flips.

use rand::Rng;

use super::{ImageError, PixelImage};

fn copy_window(img: &PixelImage, x0: u32, y0: u32, w: u32, h: u32) -> PixelImage {
    let src = img.pixels();
    let stride = img.width() as usize * 3;
    let mut out = Vec::with_capacity(w as usize * h as usize * 3);
    for y in y0..y0 + h {
        let start = y as usize * stride + x0 as usize * 3;
        out.extend_from_slice(&src[start..start + w as usize * 3]);
    }
    PixelImage::from_rgb(w, h, out).expect("window buffer matches dims")
}

fn check_crop(img: &PixelImage, w: u32, h: u32) -> Result<(), ImageError> {
    if w == 0 || h == 0 || w > img.width() || h > img.height() {
        return Err(ImageError::CropLargerThanImage {
            crop_width: w,
            crop_height: h,
            width: img.width(),
            height: img.height(),
        });
    }
    Ok(())
}

/// The centered `crop_width` x `crop_height` window, odd leftovers biased
/// toward the top-left.
pub fn center_crop(
    img: &PixelImage,
    crop_width: u32,
    crop_height: u32,
) -> Result<PixelImage, ImageError> {
    check_crop(img, crop_width, crop_height)?;
    let x0 = (img.width() - crop_width) / 2;
    let y0 = (img.height() - crop_height) / 2;
    Ok(copy_window(img, x0, y0, crop_width, crop_height))
}

/// A window at offsets drawn uniformly from the valid positions.
pub fn random_crop(
    img: &PixelImage,
    crop_width: u32,
    crop_height: u32,
    rng: &mut impl Rng,
) -> Result<PixelImage, ImageError> {
    check_crop(img, crop_width, crop_height)?;
    // Fixed draw order (x then y) so seeded streams replay exactly.
    let x0 = rng.gen_range(0..=img.width() - crop_width);
    let y0 = rng.gen_range(0..=img.height() - crop_height);
    Ok(copy_window(img, x0, y0, crop_width, crop_height))
}

/// Mirrors the image horizontally.
pub fn hflip(img: &PixelImage) -> PixelImage {
    let (w, h) = (img.width(), img.height());
    let mut out = img.clone();
    for y in 0..h {
        for x in 0..w {
            out.set(x, y, img.get(w - 1 - x, y));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gradient(w: u32, h: u32) -> PixelImage {
        let mut img = PixelImage::filled(w, h, [0, 0, 0]);
        for y in 0..h {
            for x in 0..w {
                img.set(x, y, [(x * 16) as u8, (y * 16) as u8, ((x + y) * 8) as u8]);
            }
        }
        img
    }

    #[test]
    fn hflip_is_an_involution() {
        let img = gradient(5, 4);
        assert_eq!(hflip(&hflip(&img)), img);
        assert_ne!(hflip(&img), img);
    }

    #[test]
    fn center_crop_picks_middle_rows_and_cols() {
        let img = gradient(4, 4);
        let crop = center_crop(&img, 2, 2).unwrap();
        for y in 0..2 {
            for x in 0..2 {
                assert_eq!(crop.get(x, y), img.get(x + 1, y + 1));
            }
        }
        // odd leftover biases toward the top-left
        let crop = center_crop(&gradient(5, 5), 2, 2).unwrap();
        assert_eq!(crop.get(0, 0), gradient(5, 5).get(1, 1));
    }

    #[test]
    fn oversized_crop_is_rejected() {
        let img = gradient(4, 4);
        assert!(matches!(
            center_crop(&img, 5, 2),
            Err(ImageError::CropLargerThanImage { .. })
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            random_crop(&img, 2, 9, &mut rng),
            Err(ImageError::CropLargerThanImage { .. })
        ));
    }

    #[test]
    fn random_crop_replays_under_a_fixed_seed() {
        let img = gradient(16, 16);
        let a = random_crop(&img, 5, 5, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = random_crop(&img, 5, 5, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn full_size_crop_is_identity() {
        let img = gradient(6, 3);
        assert_eq!(center_crop(&img, 6, 3).unwrap(), img);
    }
}
