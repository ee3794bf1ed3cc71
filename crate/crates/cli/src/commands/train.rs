use std::fs::{self, File};
use std::io::BufWriter;

use iqa_core::datasets::{self, DatasetDescriptor, ImageRecord};
use iqa_core::metrics::write_eval_csv;
use iqa_core::trainer::{
    run_experiment_matrix, train, EpochStats, ImageStore, TrainConfig, TrainHistory,
};
use serde_json::json;

use crate::cli::TrainArgs;
use crate::failure::Failure;
use crate::io::{create_out_dir, io_failure, load_corpus, write_json, write_result};

fn load_config(args: &TrainArgs) -> Result<TrainConfig, Failure> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
            serde_json::from_str(&text)
                .map_err(|e| Failure::Validation(format!("config {}: {e}", path.display())))?
        }
        None => TrainConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn epoch_event(stats: &EpochStats) -> serde_json::Value {
    json!({
        "epoch": stats.epoch,
        "loss": stats.train_loss,
        "val_plcc": stats.val_plcc,
        "lr": stats.lr,
    })
}

fn write_events(path: &std::path::Path, lines: &[String]) -> Result<(), Failure> {
    let mut text = lines.join("\n");
    if !text.is_empty() {
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| io_failure(path, e))
}

pub fn run(args: TrainArgs) -> Result<String, Failure> {
    let config = load_config(&args)?;
    if args.matrix {
        run_matrix(&args, config)
    } else {
        run_single(&args, config)
    }
}

fn run_single(args: &TrainArgs, config: TrainConfig) -> Result<String, Failure> {
    let plan_path = args.plan.as_ref().ok_or_else(|| {
        Failure::Validation("pass --plan <plan.csv>, or --matrix for the full experiment".into())
    })?;
    let (_, records) = load_corpus(&args.manifest, &args.descriptor)?;
    let plan = datasets::read_split_plan(plan_path)?;

    create_out_dir(&args.out)?;
    let store = ImageStore::new();
    let mut events = Vec::new();
    let (checkpoint, history) = train(&config, &records, &plan, &store, |stats| {
        log::info!(
            "epoch {}: loss {:.4}, val PLCC {:+.4}, lr {:.2e}",
            stats.epoch,
            stats.train_loss,
            stats.val_plcc,
            stats.lr
        );
        events.push(epoch_event(stats).to_string());
    })?;

    let checkpoint_path = args.out.join("checkpoint.bin");
    checkpoint.save(&checkpoint_path)?;
    let history_path = args.out.join("history.json");
    write_json(&history_path, &history)?;
    let events_path = args.out.join("events.jsonl");
    write_events(&events_path, &events)?;

    write_result(
        &args.out,
        "train",
        &[
            ("checkpoint", &checkpoint_path),
            ("history", &history_path),
            ("events", &events_path),
        ],
    )?;
    let best = &history.epochs[history.selected_epoch as usize];
    Ok(format!(
        "trained {} epoch(s) on '{}'; selected epoch {} (val PLCC {:+.4}); checkpoint at {}",
        history.epochs.len(),
        config.train_corpus.label(),
        history.selected_epoch,
        best.val_plcc,
        checkpoint_path.display()
    ))
}

fn run_matrix(args: &TrainArgs, config: TrainConfig) -> Result<String, Failure> {
    if args.manifest.len() != args.descriptor.len() {
        return Err(Failure::Validation(format!(
            "{} manifest(s) but {} descriptor(s); pass one --descriptor per --manifest",
            args.manifest.len(),
            args.descriptor.len()
        )));
    }
    let mut domains: Vec<(DatasetDescriptor, Vec<ImageRecord>)> = Vec::new();
    for (manifest, descriptor) in args.manifest.iter().zip(&args.descriptor) {
        let records = datasets::read_manifest(manifest)?;
        domains.push((crate::io::load_descriptor(descriptor)?, records));
    }

    create_out_dir(&args.out)?;
    let store = ImageStore::new();
    let mut events = Vec::new();
    let outcome = run_experiment_matrix(
        &domains,
        &config,
        args.repetitions,
        args.ratios,
        &store,
        |condition, repetition, stats| {
            log::info!(
                "{condition}/rep{repetition} epoch {}: loss {:.4}, val PLCC {:+.4}",
                stats.epoch,
                stats.train_loss,
                stats.val_plcc
            );
            let mut event = epoch_event(stats);
            let obj = event.as_object_mut().expect("event is an object");
            obj.insert("condition".into(), json!(condition));
            obj.insert("repetition".into(), json!(repetition));
            events.push(event.to_string());
        },
    )?;

    let rows_path = args.out.join("rows.csv");
    let file = File::create(&rows_path).map_err(|e| io_failure(&rows_path, e))?;
    write_eval_csv(BufWriter::new(file), &outcome.rows)?;

    let plan_path = args.out.join("plan.csv");
    datasets::write_split_plan(&plan_path, &outcome.plan)?;

    let histories: Vec<serde_json::Value> = outcome
        .histories
        .iter()
        .map(|((condition, repetition), history): (&(String, u32), &TrainHistory)| {
            json!({
                "condition": condition,
                "repetition": repetition,
                "history": history,
            })
        })
        .collect();
    let histories_path = args.out.join("histories.json");
    write_json(&histories_path, &histories)?;

    let events_path = args.out.join("events.jsonl");
    write_events(&events_path, &events)?;

    if !outcome.failures.is_empty() {
        let failures_path = args.out.join("failures.txt");
        let text: String = outcome
            .failures
            .iter()
            .map(|f| {
                format!(
                    "train {} test {} rep {}: {}\n",
                    f.train_corpus, f.test_dataset, f.repetition, f.reason
                )
            })
            .collect();
        fs::write(&failures_path, text).map_err(|e| io_failure(&failures_path, e))?;
    }

    write_result(
        &args.out,
        "train",
        &[
            ("rows", &rows_path),
            ("plan", &plan_path),
            ("histories", &histories_path),
            ("events", &events_path),
        ],
    )?;
    Ok(format!(
        "experiment matrix over {} dataset(s), {} repetition(s): {} scored rows, {} unscored cell(s); rows at {}",
        domains.len(),
        args.repetitions,
        outcome.rows.len(),
        outcome.failures.len(),
        rows_path.display()
    ))
}
