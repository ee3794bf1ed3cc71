//! The epoch loop, single-model evaluation, and the cross-domain experiment
//! matrix.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{train_transform, ImageStore, TrainConfig, TrainCorpus, TrainError, MODEL_WIDTHS};
use crate::datasets::{
    make_splits, merge_domains, verify_no_leakage, DatasetDescriptor, ImageRecord, Partition,
    SplitPlan, SplitPolicy, SplitRatios,
};
use crate::metrics::{plcc, srocc, EvalRow};
use crate::model::{
    class_weights, extract_features, onecycle_lr, quality_level, weighted_mse_loss, AdamWConfig,
    AdamWState, FeatureScaler, Gradients, MlpRegressor, ModelCheckpoint, FEATURE_TAG,
};
use crate::seeding::stream_rng;

/// Progress of one epoch, emitted through the training callback.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: u32,
    /// Class-weighted MSE over the epoch's training batches, in standardized
    /// target units.
    pub train_loss: f64,
    pub val_plcc: f64,
    /// Learning rate applied on the epoch's last optimizer step.
    pub lr: f64,
}

/// Per-epoch statistics of a finished run and which epoch the returned
/// checkpoint comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
    pub selected_epoch: u32,
}

/// One (train corpus, test dataset, repetition) cell that produced no score.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalFailure {
    pub train_corpus: String,
    pub test_dataset: String,
    pub repetition: u32,
    pub reason: String,
}

/// Scored rows plus the cells that could not be scored.
#[derive(Debug, Default)]
pub struct EvalOutcome {
    pub rows: Vec<EvalRow>,
    pub failures: Vec<EvalFailure>,
}

/// Everything a full experiment matrix produces.
#[derive(Debug)]
pub struct MatrixOutcome {
    /// Scored cells, sorted by (train corpus, test dataset, repetition).
    pub rows: Vec<EvalRow>,
    pub failures: Vec<EvalFailure>,
    pub plan: SplitPlan,
    /// Training histories keyed by (condition label, repetition).
    pub histories: BTreeMap<(String, u32), TrainHistory>,
}

/// Trains one quality regressor on the corpus and repetition named by the
/// config.
///
/// Records are filtered to the configured sources and the plan's train and
/// validation partitions. Feature and target standardization are fitted on
/// the training partition and baked into the returned checkpoint. The epoch
/// with the highest validation PLCC (earliest on ties) provides the final
/// weights; `on_epoch` sees every epoch as it finishes.
pub fn train(
    config: &TrainConfig,
    records: &[ImageRecord],
    plan: &SplitPlan,
    store: &ImageStore,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<(ModelCheckpoint, TrainHistory), TrainError> {
    config.validate()?;
    let rep = config.split_repetition;
    if rep >= plan.repetitions() {
        return Err(TrainError::InvalidConfig(format!(
            "split_repetition {rep} outside the plan's {} repetition(s)",
            plan.repetitions()
        )));
    }

    let sources = select_sources(&config.train_corpus, records)?;
    let train_records = partition_records(records, &sources, plan, rep, Partition::Train)?;
    if train_records.is_empty() {
        return Err(TrainError::EmptyTrainSet { repetition: rep });
    }
    let val_records = partition_records(records, &sources, plan, rep, Partition::Val)?;
    if val_records.is_empty() {
        return Err(TrainError::EmptyValidation { repetition: rep });
    }

    // Standardization and class weights come from the training partition
    // only; evaluation-mode features define the scaler that augmented
    // features are normalized with.
    let train_targets: Vec<f64> = train_records.iter().map(|r| r.mos.unwrap()).collect();
    let (target_mean, target_std) = mean_std(&train_targets);
    let std_targets: Vec<f64> = train_targets
        .iter()
        .map(|t| (t - target_mean) / target_std)
        .collect();

    let levels: Vec<u8> = train_targets.iter().map(|&t| quality_level(t)).collect();
    let weights_by_level = class_weights(&levels)?;
    let sample_weights: Vec<f64> = levels.iter().map(|l| weights_by_level[l]).collect();

    let mut fit_features = Vec::with_capacity(train_records.len());
    for record in &train_records {
        fit_features.push(store.eval_features(record, config.input_size)?);
    }
    let scaler = FeatureScaler::fit(&fit_features)?;

    let mut val_features = Vec::with_capacity(val_records.len());
    for record in &val_records {
        val_features.push(scaler.transform(&store.eval_features(record, config.input_size)?));
    }
    let val_targets: Vec<f64> = val_records.iter().map(|r| r.mos.unwrap()).collect();

    let label = config.train_corpus.label();
    let mut model = MlpRegressor::new(
        &MODEL_WIDTHS,
        &mut stream_rng(config.seed, &format!("init:{label}"), &[u64::from(rep)]),
    );
    let adam_config = AdamWConfig {
        weight_decay: config.weight_decay,
        ..AdamWConfig::default()
    };
    let mut adam = AdamWState::new(model.param_count());

    let n_train = train_records.len();
    let batches_per_epoch = n_train.div_ceil(config.batch_size) as u64;
    let total_steps = u64::from(config.epochs) * batches_per_epoch;

    let mut history = TrainHistory {
        epochs: Vec::with_capacity(config.epochs as usize),
        selected_epoch: 0,
    };
    let mut best_plcc = f64::NEG_INFINITY;
    let mut best_params = model.flatten_params();

    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..n_train).collect();
        order.shuffle(&mut stream_rng(
            config.seed,
            &format!("shuffle:{label}"),
            &[u64::from(rep), u64::from(epoch)],
        ));
        let mut dropout_rng = stream_rng(
            config.seed,
            &format!("dropout:{label}"),
            &[u64::from(rep), u64::from(epoch)],
        );

        let mut loss_sum = 0.0;
        let mut last_lr = 0.0;
        for (batch_idx, batch) in order.chunks(config.batch_size).enumerate() {
            let step = u64::from(epoch) * batches_per_epoch + batch_idx as u64;
            let lr = onecycle_lr(step, total_steps, config.max_lr)?;
            last_lr = lr;

            // Augmentation draws are keyed by the record's position in the
            // sorted training list, so batch composition does not change
            // which crop an image gets this epoch.
            let inputs: Vec<Vec<f64>> = batch
                .par_iter()
                .map(|&i| -> Result<Vec<f64>, TrainError> {
                    let record = train_records[i];
                    let img = store.image(record)?;
                    let mut aug_rng = stream_rng(
                        config.seed,
                        &format!("augment:{label}"),
                        &[u64::from(rep), u64::from(epoch), i as u64],
                    );
                    let crop = train_transform(
                        &img,
                        config.input_size,
                        config.oversize_fraction,
                        &mut aug_rng,
                    )?;
                    Ok(scaler.transform(&extract_features(&crop)?))
                })
                .collect::<Result<_, _>>()?;

            // Dropout masks come from one serial per-epoch stream, drawn in
            // batch order.
            let mut preds = Vec::with_capacity(batch.len());
            let mut traces = Vec::with_capacity(batch.len());
            for input in &inputs {
                let trace = model.forward_train(input, &mut dropout_rng)?;
                preds.push(trace.output);
                traces.push(trace);
            }

            let batch_targets: Vec<f64> = batch.iter().map(|&i| std_targets[i]).collect();
            let batch_weights: Vec<f64> = batch.iter().map(|&i| sample_weights[i]).collect();
            let (loss, upstream) = weighted_mse_loss(&preds, &batch_targets, &batch_weights)?;

            let mut grads = Gradients::zeros_like(&model);
            for (trace, g) in traces.iter().zip(&upstream) {
                grads.add(&model.backward(trace, *g)?);
            }
            let mut params = model.flatten_params();
            adam.apply(&mut params, &grads.flatten(), lr, &adam_config)?;
            model.set_params(&params)?;

            loss_sum += loss * batch.len() as f64;
        }

        let mut val_preds = Vec::with_capacity(val_features.len());
        for input in &val_features {
            val_preds.push(model.forward_eval(input)? * target_std + target_mean);
        }
        let val_plcc =
            plcc(&val_preds, &val_targets).map_err(|e| TrainError::DegenerateValidation {
                reason: format!("{e} over {} validation images", val_preds.len()),
            })?;

        if val_plcc > best_plcc {
            best_plcc = val_plcc;
            best_params = model.flatten_params();
            history.selected_epoch = epoch;
        }

        let stats = EpochStats {
            epoch,
            train_loss: loss_sum / n_train as f64,
            val_plcc,
            lr: last_lr,
        };
        on_epoch(&stats);
        history.epochs.push(stats);
    }

    model.set_params(&best_params)?;
    let checkpoint = ModelCheckpoint {
        feature_tag: FEATURE_TAG.to_string(),
        feature_scaler: scaler,
        target_mean,
        target_std,
        model,
        config_json: serde_json::to_string(config).expect("config serializes"),
    };
    Ok((checkpoint, history))
}

/// Scores a checkpoint on the test partition of every dataset whose split
/// policy admits one.
///
/// Cells without scored test images, or whose correlations are undefined,
/// are reported as failures rather than errors; infrastructure problems
/// (unreadable images, feature extraction) abort.
pub fn evaluate(
    checkpoint: &ModelCheckpoint,
    model_label: &str,
    train_corpus_label: &str,
    records: &[ImageRecord],
    descriptors: &[DatasetDescriptor],
    plan: &SplitPlan,
    repetition: u32,
    input_size: u32,
    store: &ImageStore,
) -> Result<EvalOutcome, TrainError> {
    let available: BTreeSet<&str> = records.iter().map(|r| r.source.as_str()).collect();
    let mut eligible: Vec<&DatasetDescriptor> = descriptors
        .iter()
        .filter(|d| d.split_policy != SplitPolicy::TrainValOnly)
        .filter(|d| available.contains(d.name.as_str()))
        .collect();
    eligible.sort_by(|a, b| a.name.cmp(&b.name));

    let mut outcome = EvalOutcome::default();
    for descriptor in eligible {
        let mut test: Vec<&ImageRecord> = records
            .iter()
            .filter(|r| r.source == descriptor.name && r.mos.is_some())
            .filter(|r| plan.partition_of(repetition, &r.subject_id) == Some(Partition::Test))
            .collect();
        test.sort_by(|a, b| a.id.cmp(&b.id));

        if test.is_empty() {
            outcome.failures.push(EvalFailure {
                train_corpus: train_corpus_label.to_string(),
                test_dataset: descriptor.name.clone(),
                repetition,
                reason: "no scored test images".to_string(),
            });
            continue;
        }

        let mut preds = Vec::with_capacity(test.len());
        let mut targets = Vec::with_capacity(test.len());
        for record in &test {
            let features = store.eval_features(record, input_size)?;
            preds.push(checkpoint.predict_features(&features)?);
            targets.push(record.mos.unwrap());
        }

        match (plcc(&preds, &targets), srocc(&preds, &targets)) {
            (Ok(p), Ok(s)) => outcome.rows.push(EvalRow {
                model: model_label.to_string(),
                train_corpus: train_corpus_label.to_string(),
                test_dataset: descriptor.name.clone(),
                repetition,
                plcc: p,
                srocc: s,
            }),
            (p, s) => {
                let reason = p.err().or(s.err()).expect("one side failed").to_string();
                outcome.failures.push(EvalFailure {
                    train_corpus: train_corpus_label.to_string(),
                    test_dataset: descriptor.name.clone(),
                    repetition,
                    reason,
                });
            }
        }
    }
    Ok(outcome)
}

/// Merges the domains, builds and audits a split plan, then trains and
/// evaluates every condition: one model per trainable dataset plus a merged
/// "all" model when there are at least two, for every repetition.
///
/// A run whose training degenerates (empty partitions, undefined validation
/// correlation) contributes failure cells instead of aborting the matrix.
/// `on_epoch` receives (condition label, repetition, stats).
pub fn run_experiment_matrix(
    domains: &[(DatasetDescriptor, Vec<ImageRecord>)],
    base_config: &TrainConfig,
    repetitions: u32,
    ratios: SplitRatios,
    store: &ImageStore,
    mut on_epoch: impl FnMut(&str, u32, &EpochStats),
) -> Result<MatrixOutcome, TrainError> {
    base_config.validate()?;
    if repetitions == 0 {
        return Err(TrainError::InvalidConfig(
            "repetitions must be at least 1".into(),
        ));
    }

    let merged = merge_domains(domains)?;
    let descriptors: Vec<DatasetDescriptor> = domains.iter().map(|(d, _)| d.clone()).collect();
    let plan = make_splits(&merged, &descriptors, repetitions, ratios, base_config.seed)?;
    let audit = verify_no_leakage(&plan, &merged, &descriptors);
    if !audit.is_clean() {
        return Err(TrainError::LeakyPlan {
            count: audit.violations.len(),
            first: audit.violations[0].to_string(),
        });
    }

    let mut trainable: Vec<&str> = descriptors
        .iter()
        .filter(|d| d.split_policy != SplitPolicy::TestOnly)
        .map(|d| d.name.as_str())
        .collect();
    trainable.sort_unstable();
    let mut testable: Vec<&str> = descriptors
        .iter()
        .filter(|d| d.split_policy != SplitPolicy::TrainValOnly)
        .map(|d| d.name.as_str())
        .collect();
    testable.sort_unstable();

    let mut conditions: Vec<TrainCorpus> = trainable
        .iter()
        .map(|n| TrainCorpus::Named(vec![n.to_string()]))
        .collect();
    if trainable.len() > 1 {
        conditions.push(TrainCorpus::All);
    }

    let mut outcome = MatrixOutcome {
        rows: Vec::new(),
        failures: Vec::new(),
        plan,
        histories: BTreeMap::new(),
    };
    for repetition in 0..repetitions {
        for condition in &conditions {
            let config = TrainConfig {
                train_corpus: condition.clone(),
                split_repetition: repetition,
                ..base_config.clone()
            };
            let label = condition.label();
            let model_label = format!("{label}/rep{repetition}");

            let trained = train(&config, &merged, &outcome.plan, store, |stats| {
                on_epoch(&label, repetition, stats)
            });
            match trained {
                Ok((checkpoint, train_history)) => {
                    let eval = evaluate(
                        &checkpoint,
                        &model_label,
                        &label,
                        &merged,
                        &descriptors,
                        &outcome.plan,
                        repetition,
                        config.input_size,
                        store,
                    )?;
                    outcome.rows.extend(eval.rows);
                    outcome.failures.extend(eval.failures);
                    outcome.histories.insert((label, repetition), train_history);
                }
                Err(
                    reason @ (TrainError::EmptyTrainSet { .. }
                    | TrainError::EmptyValidation { .. }
                    | TrainError::DegenerateValidation { .. }),
                ) => {
                    let reason = reason.to_string();
                    for name in &testable {
                        outcome.failures.push(EvalFailure {
                            train_corpus: label.clone(),
                            test_dataset: name.to_string(),
                            repetition,
                            reason: reason.clone(),
                        });
                    }
                }
                Err(other) => return Err(other),
            }
        }
    }
    outcome.rows.sort_by(|a, b| {
        (&a.train_corpus, &a.test_dataset, a.repetition).cmp(&(
            &b.train_corpus,
            &b.test_dataset,
            b.repetition,
        ))
    });
    Ok(outcome)
}

fn select_sources<'a>(
    corpus: &'a TrainCorpus,
    records: &'a [ImageRecord],
) -> Result<BTreeSet<&'a str>, TrainError> {
    let available: BTreeSet<&str> = records.iter().map(|r| r.source.as_str()).collect();
    match corpus {
        TrainCorpus::All => Ok(available),
        TrainCorpus::Named(names) => {
            let mut selected = BTreeSet::new();
            for name in names {
                if !available.contains(name.as_str()) {
                    return Err(TrainError::UnknownDataset { name: name.clone() });
                }
                selected.insert(name.as_str());
            }
            Ok(selected)
        }
    }
}

/// Records of the selected sources assigned to `partition`, sorted by id.
/// Every returned record is guaranteed to carry a score.
fn partition_records<'a>(
    records: &'a [ImageRecord],
    sources: &BTreeSet<&str>,
    plan: &SplitPlan,
    repetition: u32,
    partition: Partition,
) -> Result<Vec<&'a ImageRecord>, TrainError> {
    let mut selected: Vec<&ImageRecord> = records
        .iter()
        .filter(|r| sources.contains(r.source.as_str()))
        .filter(|r| plan.partition_of(repetition, &r.subject_id) == Some(partition))
        .collect();
    selected.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(missing) = selected.iter().find(|r| r.mos.is_none()) {
        return Err(TrainError::MissingScore {
            id: missing.id.clone(),
        });
    }
    Ok(selected)
}

/// Population mean and standard deviation; a spread below 1e-12 falls back
/// to 1.0 so standardization stays defined on constant targets.
fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    (mean, if std < 1e-12 { 1.0 } else { std })
}
