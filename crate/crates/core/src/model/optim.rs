//! Adaptive-moment optimizer with decoupled weight decay, and the one-cycle
//! learning-rate schedule driving it.

use super::ModelError;

/// Peak learning rate of the schedule and default optimizer step size.
pub const MAX_LR: f64 = 2e-4;

/// Decoupled weight-decay coefficient.
pub const WEIGHT_DECAY: f64 = 1e-5;

/// Optimizer hyperparameters. Defaults follow the common Adam settings with
/// the decay applied directly to the parameters, not through the gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: WEIGHT_DECAY,
        }
    }
}

/// Per-parameter moment accumulators and the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamWState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamWState {
    pub fn new(param_count: usize) -> Self {
        Self {
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update: bias-corrected moment step plus decoupled decay
    /// `p -= lr * decay * p`.
    pub fn apply(
        &mut self,
        params: &mut [f64],
        grads: &[f64],
        lr: f64,
        config: &AdamWConfig,
    ) -> Result<(), ModelError> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(ModelError::ShapeMismatch {
                expected: self.m.len(),
                got: params.len().min(grads.len()),
            });
        }
        self.step += 1;
        let t = self.step as i32;
        let bias1 = 1.0 - config.beta1.powi(t);
        let bias2 = 1.0 - config.beta2.powi(t);
        for i in 0..params.len() {
            self.m[i] = config.beta1 * self.m[i] + (1.0 - config.beta1) * grads[i];
            self.v[i] = config.beta2 * self.v[i] + (1.0 - config.beta2) * grads[i] * grads[i];
            let m_hat = self.m[i] / bias1;
            let v_hat = self.v[i] / bias2;
            params[i] -= lr * (m_hat / (v_hat.sqrt() + config.epsilon)
                + config.weight_decay * params[i]);
        }
        Ok(())
    }
}

/// One-cycle learning rate for `step` of `total_steps`.
///
/// Cosine warmup from `max_lr / 25` up to `max_lr` over the first 30% of
/// steps (peak at `round(0.3 * total_steps)`), then cosine annealing down to
/// `max_lr / 1e4` at the final step. The peak value is returned exactly once.
pub fn onecycle_lr(step: u64, total_steps: u64, max_lr: f64) -> Result<f64, ModelError> {
    if step >= total_steps {
        return Err(ModelError::StepOutOfRange {
            step,
            total: total_steps,
        });
    }
    let peak_step = (0.3 * total_steps as f64).round() as u64;
    let start_lr = max_lr / 25.0;
    let final_lr = max_lr / 1e4;
    if step == peak_step {
        return Ok(max_lr);
    }
    if step < peak_step {
        let progress = step as f64 / peak_step as f64;
        let shape = (1.0 - (std::f64::consts::PI * progress).cos()) / 2.0;
        return Ok(start_lr + (max_lr - start_lr) * shape);
    }
    let last = total_steps - 1;
    if peak_step >= last {
        return Ok(final_lr);
    }
    let progress = (step - peak_step) as f64 / (last - peak_step) as f64;
    let shape = (1.0 + (std::f64::consts::PI * progress).cos()) / 2.0;
    Ok(final_lr + (max_lr - final_lr) * shape)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradients_without_decay_leave_parameters_unchanged() {
        let mut params = vec![1.0, -2.5, 0.3];
        let mut state = AdamWState::new(3);
        let config = AdamWConfig {
            weight_decay: 0.0,
            ..AdamWConfig::default()
        };
        state
            .apply(&mut params, &[0.0, 0.0, 0.0], 0.1, &config)
            .unwrap();
        assert_eq!(params, vec![1.0, -2.5, 0.3]);
    }

    #[test]
    fn first_step_matches_hand_oracle() {
        // param 1.0, grad 1.0, lr 0.1, no decay: bias correction makes the
        // first step lr * g / (|g| + eps)
        let mut params = vec![1.0];
        let mut state = AdamWState::new(1);
        let config = AdamWConfig {
            weight_decay: 0.0,
            ..AdamWConfig::default()
        };
        state.apply(&mut params, &[1.0], 0.1, &config).unwrap();
        assert!((params[0] - 0.9).abs() < 1e-8, "got {}", params[0]);
    }

    #[test]
    fn decay_only_scales_parameters_per_step() {
        let mut params = vec![1.0];
        let mut state = AdamWState::new(1);
        let config = AdamWConfig::default();
        state.apply(&mut params, &[0.0], MAX_LR, &config).unwrap();
        let expected = 1.0 - MAX_LR * WEIGHT_DECAY;
        assert!((params[0] - expected).abs() < 1e-18);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut params = vec![1.0, 2.0];
        let mut state = AdamWState::new(3);
        assert!(matches!(
            state.apply(&mut params, &[0.0, 0.0], 0.1, &AdamWConfig::default()),
            Err(ModelError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn schedule_hits_the_three_anchor_points() {
        let total = 1000;
        let start = onecycle_lr(0, total, MAX_LR).unwrap();
        assert!((start - MAX_LR / 25.0).abs() < 1e-18, "start {start}");
        let peak = onecycle_lr(300, total, MAX_LR).unwrap();
        assert_eq!(peak, MAX_LR, "peak must be exact");
        let last = onecycle_lr(total - 1, total, MAX_LR).unwrap();
        assert!(last <= MAX_LR / 1e4 + 1e-12, "final {last}");
    }

    #[test]
    fn schedule_attains_its_maximum_exactly_once() {
        let total = 640;
        let values: Vec<f64> = (0..total)
            .map(|s| onecycle_lr(s, total, MAX_LR).unwrap())
            .collect();
        let max = values.iter().copied().fold(f64::MIN, f64::max);
        assert_eq!(values.iter().filter(|&&v| v == max).count(), 1);
        assert_eq!(max, MAX_LR);
    }

    #[test]
    fn schedule_rises_then_falls_monotonically() {
        let total = 500;
        let peak = (0.3 * total as f64).round() as u64;
        let values: Vec<f64> = (0..total)
            .map(|s| onecycle_lr(s, total, MAX_LR).unwrap())
            .collect();
        for s in 1..total as usize {
            if (s as u64) <= peak {
                assert!(values[s] >= values[s - 1], "warmup dips at {s}");
            } else {
                assert!(values[s] <= values[s - 1], "anneal rises at {s}");
            }
        }
    }

    #[test]
    fn schedule_total_variation_is_bounded_by_twice_the_peak() {
        // a single rise to max_lr and fall to ~0 moves the lr by at most
        // 2 * max_lr in total, so the mean step-to-step change is bounded by
        // 2 * max_lr / total_steps
        let total = 300;
        let values: Vec<f64> = (0..total)
            .map(|s| onecycle_lr(s, total, MAX_LR).unwrap())
            .collect();
        let variation: f64 = values.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        assert!(variation <= 2.0 * MAX_LR + 1e-15, "variation {variation}");
    }

    #[test]
    fn out_of_range_steps_are_rejected() {
        assert!(matches!(
            onecycle_lr(10, 10, MAX_LR),
            Err(ModelError::StepOutOfRange { step: 10, total: 10 })
        ));
        assert!(matches!(
            onecycle_lr(0, 0, MAX_LR),
            Err(ModelError::StepOutOfRange { .. })
        ));
    }

    #[test]
    fn tiny_totals_still_produce_valid_rates() {
        for total in 1..20 {
            for step in 0..total {
                let lr = onecycle_lr(step, total, MAX_LR).unwrap();
                assert!(lr > 0.0 && lr <= MAX_LR, "total {total} step {step}");
            }
        }
    }
}
