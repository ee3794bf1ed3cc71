use iqa_core::datasets::{self, harmonize_records};

use crate::cli::IngestArgs;
use crate::failure::Failure;
use crate::io::{create_out_dir, load_descriptor, write_result};

pub fn run(args: IngestArgs) -> Result<String, Failure> {
    let records = datasets::read_manifest(&args.manifest)?;
    let ratings = match &args.ratings {
        Some(path) => datasets::read_ratings(path)?,
        None => Vec::new(),
    };
    let descriptor = load_descriptor(&args.descriptor)?;

    let harmonized = harmonize_records(&records, &ratings, &descriptor)?;
    create_out_dir(&args.out)?;
    let out_path = args.out.join("harmonized.csv");
    datasets::write_manifest(&out_path, &harmonized)?;

    write_result(&args.out, "ingest", &[("manifest", &out_path)])?;
    Ok(format!(
        "harmonized {} records of {} onto [1, 10] at {}",
        harmonized.len(),
        descriptor.name,
        out_path.display()
    ))
}
