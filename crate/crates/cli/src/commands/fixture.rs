//! Synthetic demo corpus: pristine images, a descriptor, and simulated
//! observer ratings that already cover the default-ladder expansion, so the
//! whole pipeline can run end to end without any external data.

use std::fs;

use iqa_core::datasets::{
    self, DatasetDescriptor, DistortionKind, ImageRecord, RatingRow, HARMONIZED_RANGE,
};
use iqa_core::distort::DistortionLadder;
use iqa_core::fixtures::{domain_image, pseudo_mos};
use iqa_core::imagecore::{encode, ImageFormat};
use iqa_core::seeding::stream_rng;

use crate::cli::{FixtureArgs, StyleArg};
use crate::failure::Failure;
use crate::io::{create_out_dir, io_failure, write_json, write_result};

/// Integer ratings whose mean is the closest `observers`-sample approximation
/// of `target`.
fn ratings_for(image_id: &str, target: f64, observers: u8) -> Vec<RatingRow> {
    let k = u64::from(observers);
    let total = (target * k as f64).round() as u64;
    let total = total.clamp(k, 10 * k);
    let (base, extra) = (total / k, total % k);
    (0..k)
        .map(|o| RatingRow {
            image_id: image_id.to_string(),
            observer_id: format!("o{}", o + 1),
            rating: (base + u64::from(o < extra)) as u8,
        })
        .collect()
}

pub fn run(args: FixtureArgs) -> Result<String, Failure> {
    if args.count == 0 {
        return Err(Failure::Validation("--count must be at least 1".into()));
    }
    if args.observers == 0 {
        return Err(Failure::Validation("--observers must be at least 1".into()));
    }
    let name = args.name.clone().unwrap_or_else(|| {
        match args.style {
            StyleArg::Texture => "texture",
            StyleArg::Shapes => "shapes",
        }
        .to_string()
    });

    let pristine_dir = args.out.join("pristine");
    create_out_dir(&pristine_dir)?;

    // Ratings cover the ids the default ladder will produce, so `distort`
    // followed by `ingest` scores every expanded row.
    let ladder = DistortionLadder::default();
    let mut records = Vec::new();
    let mut ratings = Vec::new();
    for i in 0..args.count {
        let id = format!("{name}-p{i:03}");
        let image = domain_image(
            args.style.into(),
            args.size,
            args.size,
            &mut stream_rng(args.seed, &format!("image:{name}"), &[u64::from(i)]),
        );
        let path = pristine_dir.join(format!("{id}.png"));
        let bytes = encode(&image, ImageFormat::Png, 100)?;
        fs::write(&path, bytes).map_err(|e| io_failure(&path, e))?;
        records.push(ImageRecord {
            id: id.clone(),
            subject_id: format!("p{i:03}"),
            path,
            source: name.clone(),
            family: None,
            level: None,
            mos: None,
            native_min: None,
            native_max: None,
        });

        let mut mos_rng = stream_rng(args.seed, &format!("ratings:{name}"), &[u64::from(i)]);
        ratings.extend(ratings_for(&id, pseudo_mos(0.0, &mut mos_rng), args.observers));
        for spec in ladder.specs() {
            let severity = ladder
                .severity_fraction(spec)
                .expect("spec comes from this ladder");
            let distorted_id = format!("{id}__{}_l{}", spec.family, spec.level);
            ratings.extend(ratings_for(
                &distorted_id,
                pseudo_mos(severity, &mut mos_rng),
                args.observers,
            ));
        }
    }

    let manifest_path = args.out.join("pristine_manifest.csv");
    datasets::write_manifest(&manifest_path, &records)?;
    let ratings_path = args.out.join("ratings.csv");
    datasets::write_ratings(&ratings_path, &ratings)?;

    let descriptor = DatasetDescriptor::new(
        &name,
        HARMONIZED_RANGE,
        DistortionKind::Artificial,
        args.policy.into(),
    );
    let descriptor_path = args.out.join("descriptor.json");
    write_json(&descriptor_path, &descriptor)?;

    write_result(
        &args.out,
        "fixture",
        &[
            ("manifest", &manifest_path),
            ("ratings", &ratings_path),
            ("descriptor", &descriptor_path),
        ],
    )?;
    Ok(format!(
        "fixture {name}: {} pristine images, ratings for {} ids, descriptor at {}",
        args.count,
        ratings.len() / usize::from(args.observers),
        descriptor_path.display()
    ))
}
