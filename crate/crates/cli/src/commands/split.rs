use std::fs;

use iqa_core::datasets::{self, make_splits, verify_no_leakage};

use crate::cli::SplitArgs;
use crate::failure::Failure;
use crate::io::{create_out_dir, io_failure, load_corpus, write_result};

pub fn run(args: SplitArgs) -> Result<String, Failure> {
    let (descriptors, records) = load_corpus(&args.manifest, &args.descriptor)?;
    let plan = make_splits(&records, &descriptors, args.repetitions, args.ratios, args.seed)?;
    let audit = verify_no_leakage(&plan, &records, &descriptors);

    create_out_dir(&args.out)?;
    let plan_path = args.out.join("plan.csv");
    datasets::write_split_plan(&plan_path, &plan)?;
    let audit_path = args.out.join("audit.txt");
    let audit_text = if audit.is_clean() {
        "no violations\n".to_string()
    } else {
        audit
            .violations
            .iter()
            .map(|v| format!("{v}\n"))
            .collect::<String>()
    };
    fs::write(&audit_path, &audit_text).map_err(|e| io_failure(&audit_path, e))?;

    if !audit.is_clean() {
        return Err(Failure::Validation(format!(
            "split plan failed its leakage audit with {} violation(s); see {}",
            audit.violations.len(),
            audit_path.display()
        )));
    }

    write_result(
        &args.out,
        "split",
        &[("plan", &plan_path), ("audit", &audit_path)],
    )?;
    Ok(format!(
        "assigned {} subjects over {} repetition(s); audit clean; plan at {}",
        datasets::subjects_of(&records, None).len(),
        args.repetitions,
        plan_path.display()
    ))
}
