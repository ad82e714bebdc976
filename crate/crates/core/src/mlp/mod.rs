//! Feed-forward binary classifier with manual backpropagation.
//!
//! `L` ReLU hidden layers of equal width feed a single sigmoid output. Training
//! minimizes class-weighted binary cross-entropy with SGD or Adam, applies
//! inverted dropout to hidden activations and keeps the checkpoint with the
//! best validation ROC-AUC.

mod checkpoint;
mod model;
mod optim;
mod train;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use model::{bce_loss, forward, init_model, Dense, Gradients, MlpModel, LOG_CLAMP};
pub use optim::{AdamParams, Optimizer};
pub use train::{predict_batch, train, EpochRecord, TrainOptions, TrainOutcome};

pub const HIDDEN_LAYER_CHOICES: [usize; 5] = [1, 2, 3, 4, 5];
pub const NEURON_CHOICES: [usize; 5] = [64, 96, 128, 192, 256];
pub const BATCH_SIZE_CHOICES: [usize; 3] = [32, 64, 128];
pub const OPTIMIZER_CHOICES: [OptimizerKind; 2] = [OptimizerKind::Adam, OptimizerKind::Sgd];
pub const LEARNING_RATE_RANGE: (f64, f64) = (1e-5, 1e-3);
pub const DROPOUT_RANGE: (f64, f64) = (0.1, 0.5);

#[derive(Debug, thiserror::Error)]
pub enum MlpError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("input dimension mismatch: model expects {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("length mismatch: {predictions} predictions vs {targets} targets")]
    LengthMismatch { predictions: usize, targets: usize },
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("degenerate training set: {positives} positives, {negatives} negatives")]
    DegenerateClasses { positives: usize, negatives: usize },
    #[error("validation set must contain both classes to compute ROC-AUC")]
    DegenerateValidation,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("checkpoint version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

impl std::fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OptimizerKind::Adam => "adam",
            OptimizerKind::Sgd => "sgd",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden_layers: usize,
    pub neurons_per_layer: usize,
    pub learning_rate: f64,
    pub dropout: f64,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    /// The best configuration reported for the reference dataset, with the
    /// final-training epoch budget.
    fn default() -> Self {
        MlpConfig {
            hidden_layers: 3,
            neurons_per_layer: 192,
            learning_rate: 3e-4,
            dropout: 0.30,
            batch_size: 64,
            optimizer: OptimizerKind::Adam,
            max_epochs: 100,
            patience: 10,
            seed: 13,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<(), MlpError> {
        let bad = |msg: String| Err(MlpError::InvalidConfig(msg));
        if !HIDDEN_LAYER_CHOICES.contains(&self.hidden_layers) {
            return bad(format!("hidden_layers {} not in 1..=5", self.hidden_layers));
        }
        if !NEURON_CHOICES.contains(&self.neurons_per_layer) {
            return bad(format!(
                "neurons_per_layer {} not in {NEURON_CHOICES:?}",
                self.neurons_per_layer
            ));
        }
        let (lo, hi) = LEARNING_RATE_RANGE;
        if !(lo..=hi).contains(&self.learning_rate) {
            return bad(format!("learning_rate {} not in [{lo}, {hi}]", self.learning_rate));
        }
        let (lo, hi) = DROPOUT_RANGE;
        if !(lo..=hi).contains(&self.dropout) {
            return bad(format!("dropout {} not in [{lo}, {hi}]", self.dropout));
        }
        if !BATCH_SIZE_CHOICES.contains(&self.batch_size) {
            return bad(format!(
                "batch_size {} not in {BATCH_SIZE_CHOICES:?}",
                self.batch_size
            ));
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be at least 1".into());
        }
        if self.patience == 0 {
            return bad("patience must be at least 1".into());
        }
        Ok(())
    }
}

/// Rows of model inputs with binary targets, built on demand.
pub trait Dataset: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn input_dim(&self) -> usize;

    fn target(&self, i: usize) -> f64;

    /// Writes row `i` into `out`, which has length `input_dim()`.
    fn fill_row(&self, i: usize, out: &mut [f64]);

    fn batch(&self, indices: &[usize]) -> Array2<f64> {
        let mut x = Array2::zeros((indices.len(), self.input_dim()));
        for (mut row, &i) in x.rows_mut().into_iter().zip(indices) {
            self.fill_row(i, row.as_slice_mut().expect("standard layout"));
        }
        x
    }
}

/// A fully materialized dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixDataset {
    x: Array2<f64>,
    y: Vec<f64>,
}

impl MatrixDataset {
    pub fn new(x: Array2<f64>, y: Vec<f64>) -> Self {
        assert_eq!(x.nrows(), y.len(), "one target per row");
        MatrixDataset {
            x: x.as_standard_layout().into_owned(),
            y,
        }
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn targets(&self) -> &[f64] {
        &self.y
    }
}

impl Dataset for MatrixDataset {
    fn len(&self) -> usize {
        self.y.len()
    }

    fn input_dim(&self) -> usize {
        self.x.ncols()
    }

    fn target(&self, i: usize) -> f64 {
        self.y[i]
    }

    fn fill_row(&self, i: usize, out: &mut [f64]) {
        out.copy_from_slice(self.x.row(i).as_slice().expect("standard layout"));
    }
}
