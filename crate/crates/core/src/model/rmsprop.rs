//! RMSprop with a running mean of squared gradients, plus global-norm
//! gradient clipping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::params::{Gradients, Parameters};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmspropConfig {
    pub learning_rate: f64,
    /// Decay of the running mean square (rho).
    pub decay: f64,
    pub epsilon: f64,
}

impl Default for RmspropConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            decay: 0.9,
            epsilon: 1e-8,
        }
    }
}

impl RmspropConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be >= 0, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.decay) {
            return Err(Error::Config(format!(
                "rmsprop decay must be in [0, 1), got {}",
                self.decay
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!(
                "rmsprop epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Running mean-square accumulator, one flat buffer per parameter tensor.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RmspropState {
    pub mean_square: Vec<(String, Vec<f64>)>,
}

impl RmspropState {
    pub fn new() -> Self {
        Self::default()
    }

    fn ensure_initialized(&mut self, params: &Parameters) {
        if self.mean_square.is_empty() {
            self.mean_square = params
                .tensors()
                .into_iter()
                .map(|t| (t.name, vec![0.0; t.data.len()]))
                .collect();
        }
    }
}

/// One RMSprop update:
/// `s <- decay * s + (1 - decay) * g^2`, `theta <- theta - lr * g / sqrt(s + eps)`.
///
/// Rejects non-finite gradients, naming the offending parameter.
pub fn rmsprop_step(
    params: &mut Parameters,
    grads: &Gradients,
    state: &mut RmspropState,
    cfg: &RmspropConfig,
) -> Result<()> {
    cfg.validate()?;
    state.ensure_initialized(params);
    let grad_tensors = grads.tensors();
    if grad_tensors.len() != state.mean_square.len() {
        return Err(Error::Shape("optimizer state does not match parameters".into()));
    }
    for (tensor, grad) in grad_tensors.iter().zip(state.mean_square.iter()) {
        if tensor.name != grad.0 || tensor.data.len() != grad.1.len() {
            return Err(Error::Shape(format!(
                "optimizer state for {} does not match gradient {}",
                grad.0, tensor.name
            )));
        }
        if tensor.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("gradient of {}", tensor.name)));
        }
    }
    for ((param, grad), (_, ms)) in params
        .tensors_mut()
        .into_iter()
        .zip(grad_tensors.iter())
        .zip(state.mean_square.iter_mut())
    {
        debug_assert_eq!(param.name, grad.name);
        for ((theta, &g), s) in param.data.iter_mut().zip(grad.data.iter()).zip(ms.iter_mut()) {
            *s = cfg.decay * *s + (1.0 - cfg.decay) * g * g;
            *theta -= cfg.learning_rate * g / (*s + cfg.epsilon).sqrt();
        }
    }
    Ok(())
}

/// Scales all gradients so their global L2 norm is at most `max_norm`.
/// Returns the pre-clip norm.
pub fn clip_global_norm(grads: &mut Gradients, max_norm: f64) -> f64 {
    let norm = grads
        .tensors()
        .iter()
        .map(|t| t.data.iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        .sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for tensor in grads.tensors_mut() {
            for v in tensor.data.iter_mut() {
                *v *= scale;
            }
        }
    }
    norm
}
