use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{MlpConfig, MlpError};
use crate::corpus::ClassWeights;

/// Probabilities are clamped to `[LOG_CLAMP, 1 - LOG_CLAMP]` before the log.
pub const LOG_CLAMP: f64 = 1e-12;

/// A fully connected layer; `weights` has shape `(outputs, inputs)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }

    fn zeros_like(&self) -> Dense {
        Dense {
            weights: Array2::zeros(self.weights.raw_dim()),
            bias: Array1::zeros(self.bias.len()),
        }
    }
}

/// Parameter gradients, laid out like [`MlpModel::layers`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    /// Hidden layers followed by the single-unit output layer.
    layers: Vec<Dense>,
    config: MlpConfig,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Validates `config` and builds a He-initialized model for `input_dim` inputs.
pub fn init_model(config: &MlpConfig, input_dim: usize) -> Result<MlpModel, MlpError> {
    config.validate()?;
    let widths = vec![config.neurons_per_layer; config.hidden_layers];
    MlpModel::he_initialized(config.clone(), input_dim, &widths)
}

/// Intermediate values of one batched forward pass.
pub(crate) struct Trace {
    /// Hidden pre-activations, one `(batch, width)` matrix per layer.
    pre: Vec<Array2<f64>>,
    /// Hidden activations after ReLU and dropout.
    acts: Vec<Array2<f64>>,
    /// Inverted-dropout masks (already scaled by `1 / (1 - p)`).
    masks: Vec<Option<Array2<f64>>>,
    pub(crate) output: Array1<f64>,
}

impl MlpModel {
    /// He-normal weights (variance `2 / fan_in`) and zero biases for arbitrary
    /// hidden widths. Does not check `config` against the search-space ranges,
    /// which makes it usable for small test networks.
    pub fn he_initialized(
        config: MlpConfig,
        input_dim: usize,
        hidden_widths: &[usize],
    ) -> Result<MlpModel, MlpError> {
        if input_dim == 0 {
            return Err(MlpError::InvalidConfig("input_dim must be at least 1".into()));
        }
        if hidden_widths.contains(&0) {
            return Err(MlpError::InvalidConfig("hidden width must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut layers = Vec::with_capacity(hidden_widths.len() + 1);
        let mut fan_in = input_dim;
        for &width in hidden_widths.iter().chain(std::iter::once(&1)) {
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
            let weights = Array2::from_shape_simple_fn((width, fan_in), || normal.sample(&mut rng));
            layers.push(Dense {
                weights,
                bias: Array1::zeros(width),
            });
            fan_in = width;
        }
        Ok(MlpModel { layers, config })
    }

    /// Assembles a model from explicit parameters, checking shape agreement.
    pub fn from_layers(config: MlpConfig, layers: Vec<Dense>) -> Result<MlpModel, MlpError> {
        let bad = |msg: String| Err(MlpError::InvalidConfig(msg));
        if layers.len() < 2 {
            return bad("need at least one hidden layer and an output layer".into());
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.bias.len() != layer.outputs() {
                return bad(format!("layer {i}: bias length {} != outputs {}", layer.bias.len(), layer.outputs()));
            }
            if layer.inputs() == 0 || layer.outputs() == 0 {
                return bad(format!("layer {i}: empty weight matrix"));
            }
            if i > 0 && layer.inputs() != layers[i - 1].outputs() {
                return bad(format!(
                    "layer {i}: {} inputs but previous layer has {} outputs",
                    layer.inputs(),
                    layers[i - 1].outputs()
                ));
            }
        }
        if layers.last().expect("non-empty").outputs() != 1 {
            return bad("output layer must have exactly one unit".into());
        }
        Ok(MlpModel { layers, config })
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn config_mut(&mut self) -> &mut MlpConfig {
        &mut self.config
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub(crate) fn zero_gradients(&self) -> Gradients {
        Gradients {
            layers: self.layers.iter().map(Dense::zeros_like).collect(),
        }
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<(), MlpError> {
        if x.ncols() != self.input_dim() {
            return Err(MlpError::DimensionMismatch {
                expected: self.input_dim(),
                found: x.ncols(),
            });
        }
        Ok(())
    }

    /// Batched forward pass. With `dropout_rng`, inverted dropout is applied
    /// to every hidden activation; without it the pass is deterministic.
    pub(crate) fn forward_batch<R: Rng>(
        &self,
        x: ArrayView2<f64>,
        mut dropout_rng: Option<&mut R>,
    ) -> Trace {
        let hidden = self.layers.len() - 1;
        let p = self.config.dropout;
        let mut pre = Vec::with_capacity(hidden);
        let mut acts: Vec<Array2<f64>> = Vec::with_capacity(hidden);
        let mut masks = Vec::with_capacity(hidden);
        for layer in &self.layers[..hidden] {
            let input = acts.last().map_or(x.view(), |a| a.view());
            let z = input.dot(&layer.weights.t()) + &layer.bias;
            let mut a = z.mapv(|v| v.max(0.0));
            let mask = match dropout_rng.as_deref_mut() {
                Some(rng) if p > 0.0 => {
                    let keep = 1.0 / (1.0 - p);
                    let mask = Array2::from_shape_simple_fn(a.raw_dim(), || {
                        if rng.random::<f64>() < p {
                            0.0
                        } else {
                            keep
                        }
                    });
                    a *= &mask;
                    Some(mask)
                }
                _ => None,
            };
            pre.push(z);
            acts.push(a);
            masks.push(mask);
        }
        let out_layer = &self.layers[hidden];
        let last = acts.last().map_or(x.view(), |a| a.view());
        let logits = last.dot(&out_layer.weights.row(0)) + out_layer.bias[0];
        let output = logits.mapv(sigmoid);
        Trace {
            pre,
            acts,
            masks,
            output,
        }
    }

    /// Eval-mode probabilities for a batch of rows.
    pub fn predict_rows(&self, x: ArrayView2<f64>) -> Result<Array1<f64>, MlpError> {
        self.check_input(&x)?;
        Ok(self.forward_batch::<ChaCha8Rng>(x, None).output)
    }

    /// Backpropagates the weighted mean BCE of a traced batch.
    pub(crate) fn backward(
        &self,
        x: ArrayView2<f64>,
        trace: &Trace,
        targets: &[f64],
        weights: ClassWeights,
    ) -> Gradients {
        let n = targets.len() as f64;
        let delta_out: Array1<f64> = trace
            .output
            .iter()
            .zip(targets)
            .map(|(&p, &y)| (weights.positive * y * (p - 1.0) + weights.negative * (1.0 - y) * p) / n)
            .collect();
        let mut delta = delta_out.insert_axis(Axis(1));
        let mut grads = Vec::with_capacity(self.layers.len());
        for l in (0..self.layers.len()).rev() {
            let input = if l == 0 { x.view() } else { trace.acts[l - 1].view() };
            let weights_grad = delta.t().dot(&input);
            let bias_grad = delta.sum_axis(Axis(0));
            grads.push(Dense {
                weights: weights_grad,
                bias: bias_grad,
            });
            if l > 0 {
                let mut upstream = delta.dot(&self.layers[l].weights);
                if let Some(mask) = &trace.masks[l - 1] {
                    upstream *= mask;
                }
                ndarray::Zip::from(&mut upstream)
                    .and(&trace.pre[l - 1])
                    .for_each(|g, &z| {
                        if z <= 0.0 {
                            *g = 0.0;
                        }
                    });
                delta = upstream;
            }
        }
        grads.reverse();
        Gradients { layers: grads }
    }

    /// Weighted BCE and its gradient for one batch. Pass an RNG to train with
    /// dropout; `None` evaluates deterministically.
    pub fn loss_and_gradients<R: Rng>(
        &self,
        x: ArrayView2<f64>,
        targets: &[f64],
        weights: ClassWeights,
        dropout_rng: Option<&mut R>,
    ) -> Result<(f64, Gradients), MlpError> {
        self.check_input(&x)?;
        if x.nrows() != targets.len() {
            return Err(MlpError::LengthMismatch {
                predictions: x.nrows(),
                targets: targets.len(),
            });
        }
        let trace = self.forward_batch(x.view(), dropout_rng);
        let loss = bce_loss(trace.output.as_slice().expect("contiguous"), targets, weights)?;
        let grads = self.backward(x, &trace, targets, weights);
        Ok((loss, grads))
    }
}

/// Single-example forward pass returning the interaction probability.
pub fn forward<R: Rng>(
    model: &MlpModel,
    x: &[f64],
    train_mode: bool,
    rng: &mut R,
) -> Result<f64, MlpError> {
    let row = ArrayView2::from_shape((1, x.len()), x).expect("row vector");
    model.check_input(&row)?;
    let trace = model.forward_batch(row, train_mode.then_some(rng));
    Ok(trace.output[0])
}

/// Mean of `-[w_pos * y * ln p + w_neg * (1 - y) * ln(1 - p)]` with `p`
/// clamped to `[1e-12, 1 - 1e-12]`.
pub fn bce_loss(predictions: &[f64], targets: &[f64], weights: ClassWeights) -> Result<f64, MlpError> {
    if predictions.len() != targets.len() {
        return Err(MlpError::LengthMismatch {
            predictions: predictions.len(),
            targets: targets.len(),
        });
    }
    if predictions.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(&p, &y)| {
            let p = p.clamp(LOG_CLAMP, 1.0 - LOG_CLAMP);
            -(weights.positive * y * p.ln() + weights.negative * (1.0 - y) * (1.0 - p).ln())
        })
        .sum();
    Ok(total / predictions.len() as f64)
}
