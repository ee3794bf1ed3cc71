//! Class-weighted regression loss.
//!
//! Harmonized scores are bucketed into 10 integer quality levels; each level
//! is weighted inversely to its frequency in the training corpus so sparse
//! score regions are not drowned out by the dense middle of the scale.

use std::collections::BTreeMap;

use super::ModelError;

/// Number of quality levels the [1, 10] score range is bucketed into.
pub const NUM_QUALITY_LEVELS: u32 = 10;

/// The quality level of a harmonized score: `round(mos)` clamped to 1..=10.
pub fn quality_level(mos: f64) -> u8 {
    (mos.round() as i64).clamp(1, 10) as u8
}

/// Inverse-frequency weights `w_l = |D| / (N * count_l)` over the levels
/// present in the corpus; levels with no samples get no entry.
pub fn class_weights(levels: &[u8]) -> Result<BTreeMap<u8, f64>, ModelError> {
    if levels.is_empty() {
        return Err(ModelError::EmptyCorpus);
    }
    let mut counts: BTreeMap<u8, usize> = BTreeMap::new();
    for &l in levels {
        *counts.entry(l).or_insert(0) += 1;
    }
    let total = levels.len() as f64;
    Ok(counts
        .into_iter()
        .map(|(l, c)| (l, total / (NUM_QUALITY_LEVELS as f64 * c as f64)))
        .collect())
}

/// Per-sample weighted squared error.
///
/// Returns `loss = (1/n) * sum(w_i * (y_i - yhat_i)^2)` and the gradient
/// with respect to each prediction, `-(2/n) * w_i * (y_i - yhat_i)`.
pub fn weighted_mse_loss(
    preds: &[f64],
    targets: &[f64],
    weights: &[f64],
) -> Result<(f64, Vec<f64>), ModelError> {
    if preds.len() != targets.len() || preds.len() != weights.len() {
        return Err(ModelError::LengthMismatch {
            left: preds.len(),
            right: targets.len().max(weights.len()),
        });
    }
    if preds.is_empty() {
        return Err(ModelError::EmptyCorpus);
    }
    let n = preds.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(preds.len());
    for ((&yhat, &y), &w) in preds.iter().zip(targets).zip(weights) {
        let err = y - yhat;
        loss += w * err * err;
        grad.push(-2.0 / n * w * err);
    }
    Ok((loss / n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quality_level_rounds_and_clamps() {
        assert_eq!(quality_level(1.0), 1);
        assert_eq!(quality_level(5.4), 5);
        assert_eq!(quality_level(5.5), 6);
        assert_eq!(quality_level(10.0), 10);
        assert_eq!(quality_level(0.2), 1);
        assert_eq!(quality_level(12.7), 10);
    }

    #[test]
    fn uniform_corpus_gives_unit_weights() {
        let levels: Vec<u8> = (1..=10).flat_map(|l| [l; 3]).collect();
        let weights = class_weights(&levels).unwrap();
        assert_eq!(weights.len(), 10);
        for (_, w) in weights {
            assert!((w - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn skewed_corpus_matches_hand_oracle() {
        // |D| = 4, counts {5: 3, 6: 1}
        let weights = class_weights(&[5, 5, 5, 6]).unwrap();
        assert_eq!(weights.len(), 2);
        assert!((weights[&5] - 4.0 / 30.0).abs() < 1e-12);
        assert!((weights[&6] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn single_level_corpus_gets_one_tenth() {
        let weights = class_weights(&[7; 7]).unwrap();
        assert_eq!(weights.len(), 1);
        assert!((weights[&7] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn per_sample_weight_sum_is_corpus_size_when_all_levels_present() {
        let mut levels = Vec::new();
        for l in 1..=10u8 {
            for _ in 0..l {
                levels.push(l);
            }
        }
        let weights = class_weights(&levels).unwrap();
        let sum: f64 = levels.iter().map(|l| weights[l]).sum();
        assert!((sum - levels.len() as f64).abs() < 1e-9);
    }

    #[test]
    fn empty_corpus_is_rejected() {
        assert!(matches!(class_weights(&[]), Err(ModelError::EmptyCorpus)));
    }

    #[test]
    fn unit_weights_reduce_to_plain_mse() {
        let preds = [1.1, 2.3, 2.9];
        let targets = [1.0, 2.0, 3.0];
        let (loss, _) = weighted_mse_loss(&preds, &targets, &[1.0, 1.0, 1.0]).unwrap();
        let plain = crate::metrics::mse(&targets, &preds).unwrap();
        assert!((loss - plain).abs() < 1e-12);
    }

    #[test]
    fn perfect_predictions_have_zero_loss_and_gradient() {
        let y = [2.0, 5.0, 9.0];
        let (loss, grad) = weighted_mse_loss(&y, &y, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn single_sample_matches_hand_oracle() {
        // n=1, w=2, y=3, yhat=1 -> loss 8, dloss/dyhat = -8
        let (loss, grad) = weighted_mse_loss(&[1.0], &[3.0], &[2.0]).unwrap();
        assert!((loss - 8.0).abs() < 1e-12);
        assert!((grad[0] + 8.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        assert!(matches!(
            weighted_mse_loss(&[1.0], &[1.0, 2.0], &[1.0]),
            Err(ModelError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let preds = [1.5, 4.0, 7.5];
        let targets = [2.0, 3.5, 8.0];
        let weights = [0.5, 1.5, 2.0];
        let (_, grad) = weighted_mse_loss(&preds, &targets, &weights).unwrap();
        let h = 1e-6;
        for i in 0..preds.len() {
            let mut plus = preds;
            plus[i] += h;
            let mut minus = preds;
            minus[i] -= h;
            let (lp, _) = weighted_mse_loss(&plus, &targets, &weights).unwrap();
            let (lm, _) = weighted_mse_loss(&minus, &targets, &weights).unwrap();
            let numeric = (lp - lm) / (2.0 * h);
            assert!((grad[i] - numeric).abs() < 1e-6, "index {i}");
        }
    }
}
