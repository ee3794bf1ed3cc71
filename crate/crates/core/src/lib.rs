//! No-reference image quality assessment toolkit.
//!
//! The crate covers the full pipeline for building and evaluating blind
//! quality regressors on harmonized opinion-score data:
//!
//! * [`imagecore`] — 8-bit sRGB raster primitives: PNG/JPEG codecs, bilinear
//!   resizing, crops and flips.
//! * [`distort`] — the artificial-distortion ladder (JPEG, blur, pixelation,
//!   sharpening, brightness, color, contrast) and pristine-set expansion.
//! * [`datasets`] — dataset descriptors, rating aggregation, MOS rescaling to
//!   the common `[1, 10]` range, subject-grouped splits and leakage audits.
//! * [`metrics`] — MSE, PLCC and SROCC plus cross-repetition aggregation and
//!   report rendering.
//! * [`model`] — engineered perceptual features, the MLP regression head,
//!   inverse-frequency class weights, AdamW and the one-cycle LR schedule.
//! * [`trainer`] — augmentation transforms, the epoch loop with
//!   validation-PLCC checkpoint selection, and the cross-domain experiment
//!   matrix.
//! * [`fixtures`] — seeded procedural image generators used by benchmarks and
//!   the end-to-end test corpus.
//!
//! All stochastic components take explicit seeds; given identical inputs and
//! seeds every artifact (images, splits, checkpoints, reports) is bit-identical
//! across runs.

pub mod datasets;
pub mod distort;
pub mod fixtures;
pub mod imagecore;
pub mod metrics;
pub mod model;
pub mod trainer;
pub mod seeding;
