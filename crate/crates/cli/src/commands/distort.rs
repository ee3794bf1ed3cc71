use std::fs::File;
use std::io::BufReader;

use iqa_core::datasets;
use iqa_core::distort::{generate_dataset, DistortionLadder};

use crate::cli::DistortArgs;
use crate::failure::Failure;
use crate::io::{io_failure, write_result};

pub fn run(args: DistortArgs) -> Result<String, Failure> {
    let ladder = if args.ladder == "default" {
        DistortionLadder::default()
    } else {
        let file = File::open(&args.ladder).map_err(|e| io_failure(args.ladder.as_ref(), e))?;
        DistortionLadder::from_csv_reader(BufReader::new(file))?
    };

    let pristine = datasets::read_manifest(&args.pristine)?;
    if pristine.is_empty() {
        return Err(Failure::Validation(format!(
            "{}: pristine manifest is empty",
            args.pristine.display()
        )));
    }

    let rows = generate_dataset(&pristine, &ladder, &args.out)?;
    let manifest_path = args.out.join("manifest.csv");
    let meta_path = args.out.join("generation_meta.json");
    write_result(
        &args.out,
        "distort",
        &[("manifest", &manifest_path), ("meta", &meta_path)],
    )?;
    Ok(format!(
        "expanded {} pristine images into {} manifest rows at {}",
        pristine.len(),
        rows.len(),
        manifest_path.display()
    ))
}
