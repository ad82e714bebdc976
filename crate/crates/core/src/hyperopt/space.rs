use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::mlp::{
    MlpConfig, OptimizerKind, BATCH_SIZE_CHOICES, DROPOUT_RANGE, HIDDEN_LAYER_CHOICES, LEARNING_RATE_RANGE,
    NEURON_CHOICES, OPTIMIZER_CHOICES,
};

/// Number of discrete dimensions: hidden layers, neurons, batch size, optimizer.
pub const DISCRETE_DIMS: usize = 4;

/// Mixed search space. Continuous dimensions are handled in normalized
/// coordinates on `[0, 1]`; the learning rate maps through log10.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpace {
    pub hidden_layers: Vec<usize>,
    pub neurons: Vec<usize>,
    pub batch_sizes: Vec<usize>,
    pub optimizers: Vec<OptimizerKind>,
    pub learning_rate: (f64, f64),
    pub dropout: (f64, f64),
    /// Search the fusion weight as an extra continuous dimension.
    pub lambda1: Option<(f64, f64)>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            hidden_layers: HIDDEN_LAYER_CHOICES.to_vec(),
            neurons: NEURON_CHOICES.to_vec(),
            batch_sizes: BATCH_SIZE_CHOICES.to_vec(),
            optimizers: OPTIMIZER_CHOICES.to_vec(),
            learning_rate: LEARNING_RATE_RANGE,
            dropout: DROPOUT_RANGE,
            lambda1: None,
        }
    }
}

/// A point of the space: option indices for the discrete dimensions and
/// normalized coordinates for the continuous ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub discrete: [usize; DISCRETE_DIMS],
    pub continuous: Vec<f64>,
}

/// Decoded hyperparameters of one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub hidden_layers: usize,
    pub neurons_per_layer: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub dropout: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
}

impl HyperParams {
    pub fn to_mlp_config(&self, max_epochs: usize, patience: usize, seed: u64) -> MlpConfig {
        MlpConfig {
            hidden_layers: self.hidden_layers,
            neurons_per_layer: self.neurons_per_layer,
            learning_rate: self.learning_rate,
            dropout: self.dropout,
            batch_size: self.batch_size,
            optimizer: self.optimizer,
            max_epochs,
            patience,
            seed,
        }
    }

    pub fn from_mlp_config(config: &MlpConfig) -> HyperParams {
        HyperParams {
            hidden_layers: config.hidden_layers,
            neurons_per_layer: config.neurons_per_layer,
            batch_size: config.batch_size,
            optimizer: config.optimizer,
            learning_rate: config.learning_rate,
            dropout: config.dropout,
            lambda1: None,
        }
    }

    /// Canonical JSON; used as the fitness-cache key and in the evaluation log.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("hyperparameters serialize")
    }
}

fn lerp((lo, hi): (f64, f64), z: f64) -> f64 {
    lo + (hi - lo) * z.clamp(0.0, 1.0)
}

fn unlerp((lo, hi): (f64, f64), v: f64) -> f64 {
    ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
}

impl SearchSpace {
    pub fn option_counts(&self) -> [usize; DISCRETE_DIMS] {
        [
            self.hidden_layers.len(),
            self.neurons.len(),
            self.batch_sizes.len(),
            self.optimizers.len(),
        ]
    }

    pub fn continuous_dims(&self) -> usize {
        2 + usize::from(self.lambda1.is_some())
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.option_counts().contains(&0) {
            return Err("every discrete dimension needs at least one option".into());
        }
        let (lo, hi) = self.learning_rate;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(format!("learning_rate range ({lo}, {hi}) must satisfy 0 < lo < hi"));
        }
        let mut ranges = vec![("dropout", self.dropout)];
        if let Some(r) = self.lambda1 {
            ranges.push(("lambda1", r));
        }
        for (name, (lo, hi)) in ranges {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(format!("{name} range ({lo}, {hi}) must satisfy lo < hi"));
            }
        }
        Ok(())
    }

    /// Uniform option per discrete dimension, uniform normalized coordinate per
    /// continuous dimension (log-uniform for the learning rate).
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Candidate {
        let counts = self.option_counts();
        let mut discrete = [0; DISCRETE_DIMS];
        for (slot, &n) in discrete.iter_mut().zip(&counts) {
            *slot = rng.random_range(0..n);
        }
        let continuous = (0..self.continuous_dims()).map(|_| rng.random::<f64>()).collect();
        Candidate { discrete, continuous }
    }

    pub fn decode(&self, c: &Candidate) -> HyperParams {
        let (lr_lo, lr_hi) = self.learning_rate;
        let log_lr = lerp((lr_lo.log10(), lr_hi.log10()), c.continuous[0]);
        HyperParams {
            hidden_layers: self.hidden_layers[c.discrete[0]],
            neurons_per_layer: self.neurons[c.discrete[1]],
            batch_size: self.batch_sizes[c.discrete[2]],
            optimizer: self.optimizers[c.discrete[3]],
            learning_rate: 10f64.powf(log_lr).clamp(lr_lo, lr_hi),
            dropout: lerp(self.dropout, c.continuous[1]),
            lambda1: self.lambda1.map(|r| lerp(r, c.continuous[2])),
        }
    }

    /// Inverse of [`decode`](Self::decode); `None` when a discrete value is not an option.
    pub fn encode(&self, p: &HyperParams) -> Option<Candidate> {
        let discrete = [
            self.hidden_layers.iter().position(|&v| v == p.hidden_layers)?,
            self.neurons.iter().position(|&v| v == p.neurons_per_layer)?,
            self.batch_sizes.iter().position(|&v| v == p.batch_size)?,
            self.optimizers.iter().position(|&v| v == p.optimizer)?,
        ];
        let (lr_lo, lr_hi) = self.learning_rate;
        let mut continuous = vec![
            unlerp((lr_lo.log10(), lr_hi.log10()), p.learning_rate.log10()),
            unlerp(self.dropout, p.dropout),
        ];
        if let Some(r) = self.lambda1 {
            continuous.push(unlerp(r, p.lambda1.unwrap_or(0.5)));
        }
        Some(Candidate { discrete, continuous })
    }

    /// Discrete option index mapped onto `[0, 1]`.
    pub fn discrete_coordinate(&self, dim: usize, option: usize) -> f64 {
        let n = self.option_counts()[dim];
        if n <= 1 {
            0.0
        } else {
            option as f64 / (n - 1) as f64
        }
    }
}
