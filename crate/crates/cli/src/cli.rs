//! Argument definitions for every subcommand.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use iqa_core::datasets::{SplitPolicy, SplitRatios};
use iqa_core::fixtures::DomainStyle;
use iqa_core::trainer::DEFAULT_SEED;

#[derive(Parser)]
#[command(
    name = "iqa-forge",
    version,
    about = "Distortion synthesis, score harmonization, and cross-domain quality model training",
    after_help = "Set IQA_FORGE_LOG={error,info,debug} to control log output."
)]
pub struct Cli {
    /// Cap the worker thread count (default: one per CPU).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Generate a synthetic pristine corpus with ratings and a descriptor.
    Fixture(FixtureArgs),
    /// Expand a pristine manifest through a distortion ladder.
    Distort(DistortArgs),
    /// Score records from ratings and rescale everything onto [1, 10].
    Ingest(IngestArgs),
    /// Assign subjects to train/val/test partitions and audit for leakage.
    Split(SplitArgs),
    /// Train a quality regressor, or a full experiment matrix with --matrix.
    Train(TrainArgs),
    /// Score a checkpoint against the test partitions of a corpus.
    Eval(EvalArgs),
    /// Aggregate evaluation rows into matrix tables and score histograms.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
pub enum StyleArg {
    /// Multi-octave value noise.
    Texture,
    /// Colored gradients with flat shapes and thin strokes.
    Shapes,
}

impl From<StyleArg> for DomainStyle {
    fn from(s: StyleArg) -> Self {
        match s {
            StyleArg::Texture => DomainStyle::Texture,
            StyleArg::Shapes => DomainStyle::Shapes,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum PolicyArg {
    /// Subjects spread over train, val, and test.
    Full,
    /// Subjects never enter the test partition.
    TrainValOnly,
    /// Subjects always land in the test partition.
    TestOnly,
}

impl From<PolicyArg> for SplitPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Full => SplitPolicy::Full,
            PolicyArg::TrainValOnly => SplitPolicy::TrainValOnly,
            PolicyArg::TestOnly => SplitPolicy::TestOnly,
        }
    }
}

fn parse_ratios(s: &str) -> Result<SplitRatios, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err("expected three comma-separated fractions, e.g. 0.70,0.15,0.15".into());
    }
    let mut values = [0.0f64; 3];
    for (v, part) in values.iter_mut().zip(&parts) {
        *v = part
            .trim()
            .parse()
            .map_err(|_| format!("not a number: {part}"))?;
    }
    Ok(SplitRatios {
        train: values[0],
        val: values[1],
        test: values[2],
    })
}

#[derive(Args)]
pub struct FixtureArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,

    /// Procedural image generator to use.
    #[arg(long, value_enum, default_value = "texture")]
    pub style: StyleArg,

    /// Dataset name; defaults to the style name.
    #[arg(long)]
    pub name: Option<String>,

    /// Number of pristine images.
    #[arg(long, default_value_t = 12)]
    pub count: u32,

    /// Image width and height in pixels.
    #[arg(long, default_value_t = 128)]
    pub size: u32,

    /// Split policy recorded in the descriptor.
    #[arg(long, value_enum, default_value = "full")]
    pub policy: PolicyArg,

    /// Simulated observers per image in the ratings file.
    #[arg(long, default_value_t = 5)]
    pub observers: u8,

    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Args)]
pub struct DistortArgs {
    /// Manifest listing the pristine images.
    #[arg(long)]
    pub pristine: PathBuf,

    /// Ladder CSV file, or the literal "default" for the built-in ladder.
    #[arg(long, default_value = "default")]
    pub ladder: String,

    /// Output directory for images, manifest.csv, and generation_meta.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct IngestArgs {
    /// Manifest to harmonize.
    #[arg(long)]
    pub manifest: PathBuf,

    /// Per-observer ratings CSV; rated images are re-aggregated from it.
    #[arg(long)]
    pub ratings: Option<PathBuf>,

    /// Dataset descriptor JSON.
    #[arg(long)]
    pub descriptor: PathBuf,

    /// Output directory for harmonized.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SplitArgs {
    /// Harmonized manifest(s); repeat the flag for a multi-dataset corpus.
    #[arg(long, required = true)]
    pub manifest: Vec<PathBuf>,

    /// Descriptor JSON per manifest, in the same order.
    #[arg(long, required = true)]
    pub descriptor: Vec<PathBuf>,

    #[arg(long, default_value_t = 5)]
    pub repetitions: u32,

    /// Train,val,test fractions.
    #[arg(long, value_parser = parse_ratios, default_value = "0.70,0.15,0.15")]
    pub ratios: SplitRatios,

    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Output directory for plan.csv and audit.txt.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct TrainArgs {
    /// Harmonized manifest(s); repeat the flag for a multi-dataset corpus.
    #[arg(long, required = true)]
    pub manifest: Vec<PathBuf>,

    /// Descriptor JSON per manifest, in the same order.
    #[arg(long, required = true)]
    pub descriptor: Vec<PathBuf>,

    /// Split plan from `split`; required unless --matrix is set.
    #[arg(long, conflicts_with = "matrix")]
    pub plan: Option<PathBuf>,

    /// Training configuration JSON; missing fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Run the full experiment matrix: every single-dataset condition plus
    /// the merged corpus, each trained and cross-evaluated per repetition.
    #[arg(long)]
    pub matrix: bool,

    /// Matrix repetition count.
    #[arg(long, default_value_t = 5)]
    pub repetitions: u32,

    /// Matrix train,val,test fractions.
    #[arg(long, value_parser = parse_ratios, default_value = "0.70,0.15,0.15")]
    pub ratios: SplitRatios,

    /// Overrides the seed from the config file (config default 7919).
    #[arg(long)]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Checkpoint produced by `train`.
    #[arg(long)]
    pub checkpoint: PathBuf,

    /// Harmonized manifest(s) of the evaluation corpus.
    #[arg(long, required = true)]
    pub manifest: Vec<PathBuf>,

    /// Descriptor JSON per manifest, in the same order.
    #[arg(long, required = true)]
    pub descriptor: Vec<PathBuf>,

    /// Split plan naming the test partitions.
    #[arg(long)]
    pub plan: PathBuf,

    /// Plan repetition to score; defaults to the one the model trained on.
    #[arg(long)]
    pub repetition: Option<u32>,

    /// Train-corpus label for the report rows; defaults to the label
    /// recorded in the checkpoint.
    #[arg(long)]
    pub label: Option<String>,

    /// Output directory for rows.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct ReportArgs {
    /// Evaluation rows CSV(s) from `eval` or `train --matrix`.
    #[arg(long, required = true)]
    pub rows: Vec<PathBuf>,

    /// Harmonized manifest(s); when given, per-dataset score histograms are
    /// rendered as well.
    #[arg(long)]
    pub manifest: Vec<PathBuf>,

    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}
