//! The quality regression head: fully-connected layers with rectifier
//! activations and dropout after each hidden layer, ending in one scalar.
//!
//! Training uses explicit reverse-mode gradients rather than an autodiff
//! framework; [`MlpRegressor::backward`] consumes the [`TrainTrace`] recorded
//! by the matching train-mode forward pass, so backprop without a forward
//! pass is unrepresentable.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::ModelError;

/// Dropout rate after each hidden layer during training.
pub const DROPOUT_RATE: f64 = 0.5;

/// One fully-connected layer; weights are row-major `[out][in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn affine(&self, input: &[f64]) -> Vec<f64> {
        let mut out = self.biases.clone();
        for (o, out_v) in out.iter_mut().enumerate() {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            for (w, x) in row.iter().zip(input) {
                *out_v += w * x;
            }
        }
        out
    }
}

/// The regression head. Hidden layers use rectifier activations and (in
/// train mode) inverted dropout: retained units are scaled by
/// `1 / (1 - rate)` so eval-mode forward needs no rescaling.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpRegressor {
    layers: Vec<Layer>,
}

/// Activations and dropout masks recorded by a train-mode forward pass.
#[derive(Debug, Clone)]
pub struct TrainTrace {
    /// The network input.
    input: Vec<f64>,
    /// Pre-activation values per layer (including the output layer).
    pre_activations: Vec<Vec<f64>>,
    /// Post-rectifier, post-dropout outputs per hidden layer.
    hidden_outputs: Vec<Vec<f64>>,
    /// Dropout keep masks per hidden layer.
    masks: Vec<Vec<bool>>,
    /// The scalar prediction.
    pub output: f64,
}

impl TrainTrace {
    pub fn masks(&self) -> &[Vec<bool>] {
        &self.masks
    }
}

/// Parameter gradients, same shapes as the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(model: &MlpRegressor) -> Self {
        Self {
            weights: model
                .layers
                .iter()
                .map(|l| vec![0.0; l.weights.len()])
                .collect(),
            biases: model
                .layers
                .iter()
                .map(|l| vec![0.0; l.biases.len()])
                .collect(),
        }
    }

    pub fn add(&mut self, other: &Gradients) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    /// Flattens in the same order as [`MlpRegressor::flatten_params`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }
}

impl MlpRegressor {
    /// Builds a network with the given widths (first entry is the input
    /// dimension, last must be 1). Weights are drawn uniformly from
    /// `+-sqrt(6 / (fan_in + fan_out))`, biases start at zero.
    pub fn new(widths: &[usize], rng: &mut ChaCha8Rng) -> Self {
        assert!(widths.len() >= 2, "need at least input and output widths");
        assert_eq!(*widths.last().unwrap(), 1, "output must be scalar");
        let layers = widths
            .windows(2)
            .map(|pair| {
                let (in_dim, out_dim) = (pair[0], pair[1]);
                let bound = (6.0 / (in_dim + out_dim) as f64).sqrt();
                let weights = (0..in_dim * out_dim)
                    .map(|_| rng.gen_range(-bound..=bound))
                    .collect();
                Layer {
                    in_dim,
                    out_dim,
                    weights,
                    biases: vec![0.0; out_dim],
                }
            })
            .collect();
        Self { layers }
    }

    pub fn from_layers(layers: Vec<Layer>) -> Self {
        Self { layers }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    /// Layer widths including the input dimension.
    pub fn widths(&self) -> Vec<usize> {
        let mut widths = vec![self.layers[0].in_dim];
        widths.extend(self.layers.iter().map(|l| l.out_dim));
        widths
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// All parameters as one vector: per layer, weights row-major then
    /// biases.
    pub fn flatten_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend_from_slice(&layer.weights);
            out.extend_from_slice(&layer.biases);
        }
        out
    }

    /// Writes back a vector produced by [`Self::flatten_params`].
    pub fn set_params(&mut self, flat: &[f64]) -> Result<(), ModelError> {
        if flat.len() != self.param_count() {
            return Err(ModelError::ShapeMismatch {
                expected: self.param_count(),
                got: flat.len(),
            });
        }
        let mut cursor = 0;
        for layer in &mut self.layers {
            let w_len = layer.weights.len();
            layer.weights.copy_from_slice(&flat[cursor..cursor + w_len]);
            cursor += w_len;
            let b_len = layer.biases.len();
            layer.biases.copy_from_slice(&flat[cursor..cursor + b_len]);
            cursor += b_len;
        }
        Ok(())
    }

    fn check_input(&self, input: &[f64]) -> Result<(), ModelError> {
        if input.len() != self.input_dim() {
            return Err(ModelError::DimensionMismatch {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        Ok(())
    }

    /// Deterministic forward pass with dropout disabled.
    pub fn forward_eval(&self, input: &[f64]) -> Result<f64, ModelError> {
        self.check_input(input)?;
        let mut current = input.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = layer.affine(&current);
            if i + 1 < self.layers.len() {
                for v in &mut z {
                    *v = v.max(0.0);
                }
            }
            current = z;
        }
        Ok(current[0])
    }

    /// Train-mode forward pass: rectifier then inverted dropout after each
    /// hidden layer. Masks are drawn unit-by-unit in layer order, so the
    /// trace is a pure function of (model, input, rng state).
    pub fn forward_train(
        &self,
        input: &[f64],
        rng: &mut ChaCha8Rng,
    ) -> Result<TrainTrace, ModelError> {
        let masks = self
            .layers
            .iter()
            .take(self.layers.len() - 1)
            .map(|l| (0..l.out_dim).map(|_| rng.gen::<f64>() >= DROPOUT_RATE).collect())
            .collect();
        self.forward_with_masks(input, masks)
    }

    /// Train-mode forward with explicit dropout masks (one per hidden
    /// layer); used internally and by finite-difference tests that need to
    /// replay a fixed mask.
    pub fn forward_with_masks(
        &self,
        input: &[f64],
        masks: Vec<Vec<bool>>,
    ) -> Result<TrainTrace, ModelError> {
        self.check_input(input)?;
        if masks.len() != self.layers.len() - 1
            || masks
                .iter()
                .zip(&self.layers)
                .any(|(m, l)| m.len() != l.out_dim)
        {
            return Err(ModelError::ShapeMismatch {
                expected: self.layers.len() - 1,
                got: masks.len(),
            });
        }
        let scale = 1.0 / (1.0 - DROPOUT_RATE);
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut hidden_outputs = Vec::with_capacity(self.layers.len() - 1);
        let mut current = input.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.affine(&current);
            pre_activations.push(z.clone());
            if i + 1 < self.layers.len() {
                let dropped: Vec<f64> = z
                    .iter()
                    .zip(&masks[i])
                    .map(|(&v, &keep)| if keep { v.max(0.0) * scale } else { 0.0 })
                    .collect();
                hidden_outputs.push(dropped.clone());
                current = dropped;
            } else {
                current = z;
            }
        }
        Ok(TrainTrace {
            input: input.to_vec(),
            pre_activations,
            hidden_outputs,
            masks,
            output: current[0],
        })
    }

    /// Exact gradients of `upstream * output` with respect to every weight
    /// and bias, replaying the recorded activations and masks.
    pub fn backward(&self, trace: &TrainTrace, upstream: f64) -> Result<Gradients, ModelError> {
        if trace.input.len() != self.input_dim()
            || trace.pre_activations.len() != self.layers.len()
        {
            return Err(ModelError::ShapeMismatch {
                expected: self.layers.len(),
                got: trace.pre_activations.len(),
            });
        }
        let scale = 1.0 / (1.0 - DROPOUT_RATE);
        let mut grads = Gradients::zeros_like(self);
        // delta holds dLoss/d(layer pre-activation) while walking backwards
        let mut delta = vec![upstream];
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let layer_input: &[f64] = if i == 0 {
                &trace.input
            } else {
                &trace.hidden_outputs[i - 1]
            };
            for o in 0..layer.out_dim {
                grads.biases[i][o] = delta[o];
                let row = &mut grads.weights[i][o * layer.in_dim..(o + 1) * layer.in_dim];
                for (g, x) in row.iter_mut().zip(layer_input) {
                    *g = delta[o] * x;
                }
            }
            if i == 0 {
                break;
            }
            let mut upstream_prev = vec![0.0; layer.in_dim];
            for o in 0..layer.out_dim {
                let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (u, w) in upstream_prev.iter_mut().zip(row) {
                    *u += delta[o] * w;
                }
            }
            // back through dropout (mask + scale) and the rectifier
            let z = &trace.pre_activations[i - 1];
            let mask = &trace.masks[i - 1];
            delta = upstream_prev
                .iter()
                .zip(z.iter().zip(mask))
                .map(|(&u, (&zv, &keep))| {
                    if keep && zv > 0.0 {
                        u * scale
                    } else {
                        0.0
                    }
                })
                .collect();
        }
        Ok(grads)
    }
}
