use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{bce_loss, Dataset, MlpError, MlpModel, Optimizer};
use crate::corpus::ClassWeights;
use crate::eval::roc_auc;

const PREDICT_CHUNK: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrainOptions {
    /// Also record the eval-mode loss over the whole training set after each
    /// epoch (one extra forward pass per epoch).
    pub track_train_loss: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean of the mini-batch losses seen during the epoch (dropout active).
    pub batch_loss: f64,
    pub train_loss: Option<f64>,
    pub val_loss: f64,
    pub val_auc: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best validation ROC-AUC (ties go to
    /// the lower validation loss).
    pub model: MlpModel,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_auc: f64,
}

fn binary_labels(data: &dyn Dataset) -> Vec<bool> {
    (0..data.len()).map(|i| data.target(i) > 0.5).collect()
}

/// Eval-mode probabilities for every row of `data`.
pub fn predict_batch(model: &MlpModel, data: &dyn Dataset) -> Result<Vec<f64>, MlpError> {
    if data.input_dim() != model.input_dim() {
        return Err(MlpError::DimensionMismatch {
            expected: model.input_dim(),
            found: data.input_dim(),
        });
    }
    let mut out = Vec::with_capacity(data.len());
    let indices: Vec<usize> = (0..data.len()).collect();
    for chunk in indices.chunks(PREDICT_CHUNK) {
        let x = data.batch(chunk);
        out.extend(model.predict_rows(x.view())?.iter());
    }
    Ok(out)
}

/// Mini-batch training with per-epoch validation ROC-AUC and early stopping.
///
/// Batches are reshuffled every epoch from a generator seeded with
/// `config.seed`, so a run is fully determined by the model, the data and the
/// config. Training stops after `patience` epochs without a strict AUC
/// improvement, or at `max_epochs`.
pub fn train(
    model: MlpModel,
    train_data: &dyn Dataset,
    val_data: &dyn Dataset,
    weights: ClassWeights,
    options: TrainOptions,
) -> Result<TrainOutcome, MlpError> {
    for data in [train_data, val_data] {
        if data.input_dim() != model.input_dim() {
            return Err(MlpError::DimensionMismatch {
                expected: model.input_dim(),
                found: data.input_dim(),
            });
        }
    }
    let train_labels = binary_labels(train_data);
    let positives = train_labels.iter().filter(|&&y| y).count();
    let negatives = train_labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(MlpError::DegenerateClasses {
            positives,
            negatives,
        });
    }
    let val_labels = binary_labels(val_data);
    let val_targets: Vec<f64> = (0..val_data.len()).map(|i| val_data.target(i)).collect();
    if val_labels.iter().all(|&y| y) || val_labels.iter().all(|&y| !y) {
        return Err(MlpError::DegenerateValidation);
    }

    let config = model.config().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut optimizer = Optimizer::new(config.optimizer, &model);
    let mut model = model;
    let mut order: Vec<usize> = (0..train_data.len()).collect();
    let mut history = Vec::new();
    let mut best: Option<(f64, f64, MlpModel, usize)> = None;
    let mut stale = 0;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (batch_idx, batch) in order.chunks(config.batch_size).enumerate() {
            let x = train_data.batch(batch);
            let y: Vec<f64> = batch.iter().map(|&i| train_data.target(i)).collect();
            let (loss, grads) = model.loss_and_gradients(x.view(), &y, weights, Some(&mut rng))?;
            if !loss.is_finite() {
                return Err(MlpError::NonFiniteLoss {
                    epoch,
                    batch: batch_idx,
                });
            }
            loss_sum += loss * batch.len() as f64;
            optimizer.step(&mut model, &grads, config.learning_rate);
        }
        let batch_loss = loss_sum / train_data.len() as f64;

        let train_loss = if options.track_train_loss {
            let p = predict_batch(&model, train_data)?;
            let y: Vec<f64> = (0..train_data.len()).map(|i| train_data.target(i)).collect();
            Some(bce_loss(&p, &y, weights)?)
        } else {
            None
        };
        let val_pred = predict_batch(&model, val_data)?;
        let val_loss = bce_loss(&val_pred, &val_targets, weights)?;
        if !val_loss.is_finite() || val_pred.iter().any(|p| !p.is_finite()) {
            return Err(MlpError::NonFiniteLoss {
                epoch,
                batch: usize::MAX,
            });
        }
        let val_auc = roc_auc(&val_pred, &val_labels).map_err(|_| MlpError::DegenerateValidation)?;
        history.push(EpochRecord {
            epoch,
            batch_loss,
            train_loss,
            val_loss,
            val_auc,
        });

        let improved = best.as_ref().is_none_or(|(auc, _, _, _)| val_auc > *auc);
        let tie_better = best
            .as_ref()
            .is_some_and(|(auc, loss, _, _)| val_auc == *auc && val_loss < *loss);
        if improved || tie_better {
            best = Some((val_auc, val_loss, model.clone(), epoch));
        }
        if improved {
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }

    let (best_val_auc, _, model, best_epoch) = best.expect("max_epochs >= 1");
    Ok(TrainOutcome {
        model,
        history,
        best_epoch,
        best_val_auc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::{init_model, MatrixDataset, MlpConfig, OptimizerKind};
    use ndarray::Array2;

    /// Eight points in the plane, separable by x0 + x1 > 0.
    fn separable() -> MatrixDataset {
        let pts = [
            ([1.0, 0.8], 1.0),
            ([0.6, 1.2], 1.0),
            ([1.5, -0.2], 1.0),
            ([0.3, 0.9], 1.0),
            ([-1.0, -0.7], 0.0),
            ([-0.4, -1.3], 0.0),
            ([-1.2, 0.3], 0.0),
            ([0.2, -1.1], 0.0),
        ];
        let x = Array2::from_shape_fn((8, 2), |(i, j)| pts[i].0[j]);
        MatrixDataset::new(x, pts.iter().map(|p| p.1).collect())
    }

    fn toy_config() -> MlpConfig {
        MlpConfig {
            hidden_layers: 1,
            neurons_per_layer: 64,
            learning_rate: 1e-3,
            dropout: 0.1,
            batch_size: 32,
            optimizer: OptimizerKind::Adam,
            max_epochs: 400,
            patience: 400,
            seed: 5,
        }
    }

    #[test]
    fn separable_toy_set_is_learned() {
        let data = separable();
        let model = init_model(&toy_config(), 2).unwrap();
        let out = train(
            model,
            &data,
            &data,
            ClassWeights::default(),
            TrainOptions {
                track_train_loss: true,
            },
        )
        .unwrap();
        let losses: Vec<f64> = out.history[..5].iter().map(|r| r.train_loss.unwrap()).collect();
        assert!(losses.windows(2).all(|w| w[1] < w[0]), "{losses:?}");
        let p = predict_batch(&out.model, &data).unwrap();
        let correct = p
            .iter()
            .zip(data.targets())
            .filter(|(p, y)| (**p >= 0.5) == (**y > 0.5))
            .count();
        assert_eq!(correct, 8, "{p:?}");
    }

    #[test]
    fn zero_learning_rate_leaves_parameters_unchanged() {
        let data = separable();
        let mut model = init_model(&toy_config(), 2).unwrap();
        model.config_mut().learning_rate = 0.0;
        model.config_mut().max_epochs = 1;
        let before = model.clone();
        let out = train(model, &data, &data, ClassWeights::default(), TrainOptions::default()).unwrap();
        assert_eq!(out.model.layers(), before.layers());
    }

    #[test]
    fn training_is_deterministic() {
        let data = separable();
        let mut config = toy_config();
        config.max_epochs = 20;
        config.optimizer = OptimizerKind::Sgd;
        let run = || {
            let model = init_model(&config, 2).unwrap();
            train(model, &data, &data, ClassWeights::default(), TrainOptions::default()).unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.history, b.history);
        assert_eq!(a.model, b.model);
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let x = Array2::zeros((3, 2));
        let one_class = MatrixDataset::new(x, vec![1.0, 1.0, 1.0]);
        let model = init_model(&toy_config(), 2).unwrap();
        assert!(matches!(
            train(model.clone(), &one_class, &separable(), ClassWeights::default(), TrainOptions::default()),
            Err(MlpError::DegenerateClasses { .. })
        ));
        assert!(matches!(
            train(model.clone(), &separable(), &one_class, ClassWeights::default(), TrainOptions::default()),
            Err(MlpError::DegenerateValidation)
        ));
        let wide = MatrixDataset::new(Array2::zeros((2, 3)), vec![0.0, 1.0]);
        assert!(matches!(
            predict_batch(&model, &wide),
            Err(MlpError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn predictions_are_probabilities_and_row_independent() {
        let data = separable();
        let model = init_model(&toy_config(), 2).unwrap();
        let p = predict_batch(&model, &data).unwrap();
        assert!(p.iter().all(|&v| v > 0.0 && v < 1.0));
        let x = Array2::from_shape_fn((3, 2), |(i, j)| data.features()[[i % 2, j]]);
        let dup = model.predict_rows(x.view()).unwrap();
        assert_eq!(dup[0].to_bits(), dup[2].to_bits());
    }
}
