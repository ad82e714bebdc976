use ndarray::Zip;

use super::{Dense, Gradients, MlpModel, OptimizerKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Parameter update rule with its running state.
#[derive(Debug, Clone)]
pub enum Optimizer {
    Sgd,
    Adam {
        params: AdamParams,
        first: Vec<Dense>,
        second: Vec<Dense>,
        step: i32,
    },
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, model: &MlpModel) -> Self {
        match kind {
            OptimizerKind::Sgd => Optimizer::Sgd,
            OptimizerKind::Adam => {
                let zeros = model.zero_gradients().layers;
                Optimizer::Adam {
                    params: AdamParams::default(),
                    first: zeros.clone(),
                    second: zeros,
                    step: 0,
                }
            }
        }
    }

    pub fn step(&mut self, model: &mut MlpModel, grads: &Gradients, learning_rate: f64) {
        match self {
            Optimizer::Sgd => {
                for (layer, g) in model.layers_mut().iter_mut().zip(&grads.layers) {
                    layer.weights.scaled_add(-learning_rate, &g.weights);
                    layer.bias.scaled_add(-learning_rate, &g.bias);
                }
            }
            Optimizer::Adam {
                params,
                first,
                second,
                step,
            } => {
                *step += 1;
                let AdamParams {
                    beta1,
                    beta2,
                    epsilon,
                } = *params;
                let c1 = 1.0 - beta1.powi(*step);
                let c2 = 1.0 - beta2.powi(*step);
                let update = |theta: &mut f64, g: &f64, m: &mut f64, v: &mut f64| {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    let m_hat = *m / c1;
                    let v_hat = *v / c2;
                    *theta -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
                };
                for (((layer, g), m), v) in model
                    .layers_mut()
                    .iter_mut()
                    .zip(&grads.layers)
                    .zip(first.iter_mut())
                    .zip(second.iter_mut())
                {
                    Zip::from(&mut layer.weights)
                        .and(&g.weights)
                        .and(&mut m.weights)
                        .and(&mut v.weights)
                        .for_each(update);
                    Zip::from(&mut layer.bias)
                        .and(&g.bias)
                        .and(&mut m.bias)
                        .and(&mut v.bias)
                        .for_each(update);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::{init_model, MlpConfig};

    #[test]
    fn adam_with_zero_gradient_is_a_no_op() {
        let mut model = init_model(&MlpConfig::default(), 5).unwrap();
        let before = model.clone();
        let zeros = model.zero_gradients();
        let mut opt = Optimizer::new(OptimizerKind::Adam, &model);
        opt.step(&mut model, &zeros, 1e-3);
        opt.step(&mut model, &zeros, 1e-3);
        assert_eq!(model, before);
    }

    #[test]
    fn sgd_moves_against_gradient() {
        let mut model = init_model(&MlpConfig::default(), 2).unwrap();
        let before = model.clone();
        let mut grads = model.zero_gradients();
        grads.layers[0].weights[[0, 0]] = 2.0;
        Optimizer::new(OptimizerKind::Sgd, &model).step(&mut model, &grads, 0.5);
        let delta = model.layers()[0].weights[[0, 0]] - before.layers()[0].weights[[0, 0]];
        assert_eq!(delta, -1.0);
    }

    #[test]
    fn first_adam_step_has_learning_rate_magnitude() {
        let mut model = init_model(&MlpConfig::default(), 2).unwrap();
        let before = model.clone();
        let mut grads = model.zero_gradients();
        grads.layers[1].bias[3] = 0.37;
        Optimizer::new(OptimizerKind::Adam, &model).step(&mut model, &grads, 1e-3);
        let delta = model.layers()[1].bias[3] - before.layers()[1].bias[3];
        assert!((delta + 1e-3).abs() < 1e-9, "{delta}");
    }
}
