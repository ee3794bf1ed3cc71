//! Randomized checks of the library's structural guarantees: image ops that
//! must be exact, order preservation in score harmonization, split stability
//! and leakage freedom, correlation symmetries, and loss/schedule identities.

use std::path::PathBuf;

use proptest::collection::vec;
use proptest::prelude::*;

use iqa_core::datasets::{
    make_splits, rescale_mos, verify_no_leakage, DatasetDescriptor, DistortionKind, ImageRecord,
    SplitPolicy, DEFAULT_RATIOS,
};
use iqa_core::distort::{apply, DistortionLadder};
use iqa_core::imagecore::{center_crop, decode, encode, hflip, resize_bilinear, ImageFormat, PixelImage};
use iqa_core::metrics::{mse, plcc, srocc};
use iqa_core::model::{class_weights, onecycle_lr, weighted_mse_loss, NUM_QUALITY_LEVELS};

fn arb_image(max_side: u32) -> impl Strategy<Value = PixelImage> {
    (2..=max_side, 2..=max_side).prop_flat_map(|(w, h)| {
        vec(any::<u8>(), (w * h * 3) as usize)
            .prop_map(move |pixels| PixelImage::from_rgb(w, h, pixels).unwrap())
    })
}

/// Vectors long enough for correlation and guaranteed non-constant.
fn arb_spread_vector() -> impl Strategy<Value = Vec<f64>> {
    vec(-100.0..100.0f64, 3..40).prop_filter("needs spread", |v| {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo > 1e-3
    })
}

/// Tie-free vectors: perturbing by index guarantees distinct values.
fn arb_tie_free_vector() -> impl Strategy<Value = Vec<f64>> {
    vec(-50.0..50.0f64, 3..30).prop_map(|mut v| {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v.dedup();
        for (i, value) in v.iter_mut().enumerate() {
            *value += i as f64 * 1e-7;
        }
        v
    })
    .prop_filter("needs at least 3 distinct", |v| v.len() >= 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn resize_to_same_size_is_identity(img in arb_image(24)) {
        let out = resize_bilinear(&img, img.width(), img.height());
        prop_assert_eq!(out.pixels(), img.pixels());
    }

    #[test]
    fn hflip_is_an_involution(img in arb_image(24)) {
        let back = hflip(&hflip(&img));
        prop_assert_eq!(back.pixels(), img.pixels());
    }

    #[test]
    fn center_crop_has_requested_dimensions(
        img in arb_image(24),
        fw in 0.1..1.0f64,
        fh in 0.1..1.0f64,
    ) {
        let cw = ((img.width() as f64 * fw) as u32).max(1);
        let ch = ((img.height() as f64 * fh) as u32).max(1);
        let out = center_crop(&img, cw, ch).unwrap();
        prop_assert_eq!((out.width(), out.height()), (cw, ch));
    }

    #[test]
    fn png_roundtrip_is_identity(img in arb_image(16)) {
        let bytes = encode(&img, ImageFormat::Png, 100).unwrap();
        let back = decode(&bytes, ImageFormat::Png).unwrap();
        prop_assert_eq!(back.pixels(), img.pixels());
    }

    #[test]
    fn distortions_preserve_dimensions(img in arb_image(24), index in 0usize..18) {
        let ladder = DistortionLadder::default();
        let spec = &ladder.specs()[index];
        let out = apply(&img, spec).unwrap();
        prop_assert_eq!((out.width(), out.height()), (img.width(), img.height()));
    }
}

proptest! {
    #[test]
    fn rescaling_preserves_order(
        lo in -10.0..5.0f64,
        span in 0.5..100.0f64,
        a in 0.0..1.0f64,
        b in 0.0..1.0f64,
    ) {
        let range = (lo, lo + span);
        let (x, y) = (lo + a.min(b) * span, lo + a.max(b) * span);
        prop_assume!(y > x);
        let (rx, ry) = (rescale_mos(x, range).unwrap(), rescale_mos(y, range).unwrap());
        prop_assert!(rx < ry, "{rx} !< {ry}");
        // Endpoints land on the harmonized range exactly.
        prop_assert!((rescale_mos(lo, range).unwrap() - 1.0).abs() < 1e-12);
        prop_assert!((rescale_mos(lo + span, range).unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn correlations_are_symmetric(x in arb_spread_vector(), shift in -5.0..5.0f64) {
        // A shifted, noisier copy with matching length; spread is preserved.
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| v * 0.7 + shift + (i % 3) as f64).collect();
        prop_assert_eq!(plcc(&x, &y).unwrap(), plcc(&y, &x).unwrap());
        prop_assert_eq!(srocc(&x, &y).unwrap(), srocc(&y, &x).unwrap());
    }

    #[test]
    fn plcc_of_affine_image_is_sign_of_slope(
        x in arb_spread_vector(),
        a in prop::sample::select(vec![-3.0, -0.5, 0.25, 2.0]),
        b in -10.0..10.0f64,
    ) {
        let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let r = plcc(&x, &y).unwrap();
        prop_assert!((r - a.signum()).abs() < 1e-9, "plcc {r} for slope {a}");
    }

    #[test]
    fn srocc_ignores_monotone_transforms(x in arb_tie_free_vector()) {
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| v + ((i * 7) % 5) as f64).collect();
        let transformed: Vec<f64> = x.iter().map(|v| (v / 60.0).exp()).collect();
        prop_assert_eq!(srocc(&x, &y).unwrap(), srocc(&transformed, &y).unwrap());
    }

    #[test]
    fn unit_weights_reduce_to_plain_mse(
        pairs in vec((-10.0..10.0f64, -10.0..10.0f64), 1..50),
    ) {
        let preds: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let targets: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let ones = vec![1.0; preds.len()];
        let (weighted, _) = weighted_mse_loss(&preds, &targets, &ones).unwrap();
        let plain = mse(&preds, &targets).unwrap();
        prop_assert!((weighted - plain).abs() < 1e-12);
    }

    #[test]
    fn class_weight_mass_matches_populated_share(levels in vec(1u8..=10, 1..400)) {
        let weights = class_weights(&levels).unwrap();
        let sample_sum: f64 = levels.iter().map(|l| weights[l]).sum();
        let populated = weights.len() as f64;
        let expected = levels.len() as f64 * populated / NUM_QUALITY_LEVELS as f64;
        prop_assert!((sample_sum - expected).abs() < 1e-9 * levels.len() as f64);
    }

    #[test]
    fn schedule_stays_in_range_and_peaks_once(total in 10u64..3000) {
        let max_lr = 2e-4;
        let mut peak_count = 0;
        let mut previous = 0.0;
        for step in 0..total {
            let lr = onecycle_lr(step, total, max_lr).unwrap();
            prop_assert!(lr > 0.0 && lr <= max_lr);
            if lr == max_lr {
                peak_count += 1;
            }
            if step > 0 {
                prop_assert!(lr != previous, "plateau at step {step}");
            }
            previous = lr;
        }
        prop_assert_eq!(peak_count, 1);
    }
}

fn corpus(
    sources: &[(&str, usize, SplitPolicy)],
) -> (Vec<ImageRecord>, Vec<DatasetDescriptor>) {
    let mut records = Vec::new();
    let mut descriptors = Vec::new();
    for &(name, subjects, policy) in sources {
        descriptors.push(DatasetDescriptor::new(
            name,
            (1.0, 10.0),
            DistortionKind::Authentic,
            policy,
        ));
        for s in 0..subjects {
            for i in 0..2 {
                records.push(ImageRecord {
                    id: format!("{name}-s{s}-i{i}"),
                    subject_id: format!("{name}-s{s}"),
                    path: PathBuf::from(format!("mem://{name}/{s}/{i}.png")),
                    source: name.to_string(),
                    family: None,
                    level: None,
                    mos: Some(5.0),
                    native_min: Some(1.0),
                    native_max: Some(10.0),
                });
            }
        }
    }
    (records, descriptors)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn split_plans_ignore_record_order(
        subjects_a in 7usize..40,
        subjects_b in 7usize..40,
        seed in 0u64..1000,
        shuffle_seed in 0u64..1000,
    ) {
        let (mut records, descriptors) = corpus(&[
            ("a", subjects_a, SplitPolicy::Full),
            ("b", subjects_b, SplitPolicy::Full),
        ]);
        let baseline = make_splits(&records, &descriptors, 3, DEFAULT_RATIOS, seed).unwrap();

        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(shuffle_seed);
        records.shuffle(&mut rng);
        let shuffled = make_splits(&records, &descriptors, 3, DEFAULT_RATIOS, seed).unwrap();
        prop_assert_eq!(baseline, shuffled);
    }

    #[test]
    fn generated_splits_never_leak(
        subjects_a in 7usize..40,
        subjects_b in 7usize..40,
        subjects_c in 2usize..10,
        seed in 0u64..1000,
    ) {
        let (records, descriptors) = corpus(&[
            ("a", subjects_a, SplitPolicy::Full),
            ("b", subjects_b, SplitPolicy::Full),
            ("test-pool", subjects_c, SplitPolicy::TestOnly),
            ("train-pool", subjects_c, SplitPolicy::TrainValOnly),
        ]);
        let plan = make_splits(&records, &descriptors, 5, DEFAULT_RATIOS, seed).unwrap();
        let report = verify_no_leakage(&plan, &records, &descriptors);
        prop_assert!(report.is_clean(), "violations: {:?}", report.violations);
    }

    #[test]
    fn split_fractions_track_ratios(subjects in 10usize..60, seed in 0u64..1000) {
        let (records, descriptors) = corpus(&[("a", subjects, SplitPolicy::Full)]);
        let plan = make_splits(&records, &descriptors, 1, DEFAULT_RATIOS, seed).unwrap();
        let counts = plan.partition_counts(0);
        let total: usize = counts.values().sum();
        prop_assert_eq!(total, subjects);
        for (partition, ratio) in [
            (iqa_core::datasets::Partition::Train, DEFAULT_RATIOS.train),
            (iqa_core::datasets::Partition::Val, DEFAULT_RATIOS.val),
            (iqa_core::datasets::Partition::Test, DEFAULT_RATIOS.test),
        ] {
            let got = *counts.get(&partition).unwrap_or(&0) as f64;
            prop_assert!(
                (got - subjects as f64 * ratio).abs() <= 1.0,
                "{partition:?}: {got} subjects for ratio {ratio} of {subjects}"
            );
        }
    }
}
