use std::fs::{self, File};
use std::io::BufWriter;

use iqa_core::datasets;
use iqa_core::metrics::write_eval_csv;
use iqa_core::model::ModelCheckpoint;
use iqa_core::trainer::{evaluate, ImageStore, TrainConfig};

use crate::cli::EvalArgs;
use crate::failure::Failure;
use crate::io::{create_out_dir, io_failure, load_corpus, write_result};

pub fn run(args: EvalArgs) -> Result<String, Failure> {
    let checkpoint = ModelCheckpoint::load(&args.checkpoint)?;
    let config: TrainConfig = serde_json::from_str(&checkpoint.config_json).map_err(|e| {
        Failure::Validation(format!(
            "{}: checkpoint carries an unreadable training config: {e}",
            args.checkpoint.display()
        ))
    })?;

    let (descriptors, records) = load_corpus(&args.manifest, &args.descriptor)?;
    let plan = datasets::read_split_plan(&args.plan)?;
    let repetition = args.repetition.unwrap_or(config.split_repetition);
    let corpus_label = args
        .label
        .clone()
        .unwrap_or_else(|| config.train_corpus.label());
    let model_label = format!("{corpus_label}/rep{repetition}");

    let store = ImageStore::new();
    let outcome = evaluate(
        &checkpoint,
        &model_label,
        &corpus_label,
        &records,
        &descriptors,
        &plan,
        repetition,
        config.input_size,
        &store,
    )?;

    create_out_dir(&args.out)?;
    let rows_path = args.out.join("rows.csv");
    let file = File::create(&rows_path).map_err(|e| io_failure(&rows_path, e))?;
    write_eval_csv(BufWriter::new(file), &outcome.rows)?;

    // Unscorable cells are recorded, not fatal: the rows that exist are valid.
    if !outcome.failures.is_empty() {
        let failures_path = args.out.join("failures.txt");
        let text: String = outcome
            .failures
            .iter()
            .map(|f| format!("test {} rep {}: {}\n", f.test_dataset, f.repetition, f.reason))
            .collect();
        fs::write(&failures_path, text).map_err(|e| io_failure(&failures_path, e))?;
    }

    write_result(&args.out, "eval", &[("rows", &rows_path)])?;
    Ok(format!(
        "scored {} test set(s) for {model_label} ({} unscorable); rows at {}",
        outcome.rows.len(),
        outcome.failures.len(),
        rows_path.display()
    ))
}
