use serde::{Deserialize, Serialize};

use super::params::ParamStore;
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Adam hyperparameters with decoupled weight decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl AdamState {
    pub fn new(params: &ParamStore, config: AdamConfig) -> Self {
        let zeros = || {
            params
                .ids()
                .map(|id| Tensor::zeros(params.value(id).shape()))
                .collect()
        };
        AdamState {
            config,
            step: 0,
            m: zeros(),
            v: zeros(),
        }
    }
}

/// One bias-corrected Adam update using the gradients held in `params`,
/// plus the decoupled decay `−lr·λ·θ`. Gradients are validated before any
/// parameter changes.
pub fn adam_step(params: &mut ParamStore, state: &mut AdamState) -> Result<()> {
    if state.m.len() != params.len() {
        return Err(Error::Shape(format!(
            "optimizer tracks {} parameters, store has {}",
            state.m.len(),
            params.len()
        )));
    }
    let ids: Vec<_> = params.ids().collect();
    for &id in &ids {
        if !params.grad(id).all_finite() {
            return Err(Error::NonFiniteGradient(params.name(id).to_string()));
        }
    }
    let c = state.config;
    state.step += 1;
    let bc1 = 1.0 - c.beta1.powi(state.step as i32);
    let bc2 = 1.0 - c.beta2.powi(state.step as i32);
    for id in ids {
        let i = id.index();
        let g = params.grad(id).data().to_vec();
        let (m, v) = (state.m[i].data_mut(), state.v[i].data_mut());
        let theta = params.value_mut(id).data_mut();
        for j in 0..g.len() {
            m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
            v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
            let mhat = m[j] / bc1;
            let vhat = v[j] / bc2;
            theta[j] -= c.lr * (mhat / (vhat.sqrt() + c.eps) + c.weight_decay * theta[j]);
        }
    }
    Ok(())
}
