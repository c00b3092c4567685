use serde::{Deserialize, Serialize};

use super::mlp::{Gradients, Mlp};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment estimates, flattened in parameter order.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(config: AdamConfig, net: &Mlp) -> Self {
        let n = net.num_params();
        AdamState {
            config,
            step: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }
}

/// One bias-corrected Adam descent step. A gradient with any non-finite
/// entry is rejected and leaves weights and moments untouched.
pub fn adam_step(net: &mut Mlp, grads: &Gradients, st: &mut AdamState) -> Result<()> {
    if st.m.len() != net.num_params() || grads.layers.len() != net.layers().len() {
        return Err(Error::contract("optimizer state does not match the network"));
    }
    for (g, l) in grads.layers.iter().zip(net.layers()) {
        if g.weight.dim() != l.weight.dim() || g.bias.len() != l.bias.len() {
            return Err(Error::contract("gradient shape does not match the network"));
        }
    }
    if !grads.is_finite() {
        return Err(Error::NonFinite {
            context: "adam gradient".into(),
        });
    }
    let AdamConfig {
        learning_rate,
        beta1,
        beta2,
        epsilon,
    } = st.config;
    st.step += 1;
    let t = st.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    for ((g, m), v) in grads.iter().zip(st.m.iter_mut()).zip(st.v.iter_mut()) {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
    }
    let mut idx = 0;
    let (m, v) = (&st.m, &st.v);
    net.apply_update(|_, _, w| {
        let step = learning_rate * (m[idx] / c1) / ((v[idx] / c2).sqrt() + epsilon);
        idx += 1;
        w - step
    });
    Ok(())
}
