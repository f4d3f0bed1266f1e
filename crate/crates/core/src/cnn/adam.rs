use serde::{Deserialize, Serialize};

use super::{apply_max_norm, CnnModel, Gradients, ParamId};
use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam moments, one tensor per model parameter in declaration order.
#[derive(Clone, Debug)]
pub struct TrainState<F> {
    pub first_moment: Vec<Vec<F>>,
    pub second_moment: Vec<Vec<F>>,
    pub step: u64,
}

impl<F: Real> TrainState<F> {
    pub fn new(model: &CnnModel<F>) -> Self {
        let zeros: Vec<Vec<F>> = model
            .param_ids()
            .into_iter()
            .map(|id| {
                // Static tensors never move; keep their moments empty.
                let len = if model.is_trainable(id) { model.param(id).len() } else { 0 };
                vec![F::zero(); len]
            })
            .collect();
        TrainState {
            first_moment: zeros.clone(),
            second_moment: zeros,
            step: 0,
        }
    }
}

/// One Adam update with bias correction, followed by the max-norm cap on the
/// output rows and re-zeroing of the `<pad>` embeddings.
///
/// A non-finite gradient aborts the step before anything is modified.
pub fn adam_step<F: Real>(
    model: &mut CnnModel<F>,
    state: &mut TrainState<F>,
    grads: &Gradients<F>,
    config: &AdamConfig,
) -> Result<()> {
    if let Some(name) = grads.first_non_finite() {
        return Err(Error::NonFinite(name));
    }
    let ids = model.param_ids();
    if state.first_moment.len() != ids.len() {
        return Err(Error::Shape("optimizer state does not match model".into()));
    }

    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (F::of(config.beta1), F::of(config.beta2));
    let correction1 = F::of(1.0 - config.beta1.powi(t));
    let correction2 = F::of(1.0 - config.beta2.powi(t));
    let (lr, eps) = (F::of(config.lr), F::of(config.eps));
    let dim = model.config.embedding_dim;

    for (slot, id) in ids.into_iter().enumerate() {
        if !model.is_trainable(id) {
            continue;
        }
        let m = &mut state.first_moment[slot];
        let v = &mut state.second_moment[slot];
        let params = model.param_mut(id);
        if m.len() != params.len() {
            return Err(Error::Shape("optimizer moments do not match parameter".into()));
        }
        let len = m.len();
        let mut update = |i: usize, g: F| {
            m[i] = b1 * m[i] + (F::one() - b1) * g;
            v[i] = b2 * v[i] + (F::one() - b2) * g * g;
            let m_hat = m[i] / correction1;
            let v_hat = v[i] / correction2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        };
        match id {
            ParamId::Embedding(c) => {
                // Sparse rows; every other row sees a zero gradient.
                let rows = &grads.embeddings[c];
                for row in 0..len / dim {
                    match rows.get(&row) {
                        Some(g) => (0..dim).for_each(|k| update(row * dim + k, g[k])),
                        None => (0..dim).for_each(|k| update(row * dim + k, F::zero())),
                    }
                }
            }
            ParamId::ConvWeight(b) => grads.conv_weights[b].iter().enumerate().for_each(|(i, &g)| update(i, g)),
            ParamId::ConvBias(b) => grads.conv_bias[b].iter().enumerate().for_each(|(i, &g)| update(i, g)),
            ParamId::FcWeight => grads.fc_weights.iter().enumerate().for_each(|(i, &g)| update(i, g)),
            ParamId::FcBias => grads.fc_bias.iter().enumerate().for_each(|(i, &g)| update(i, g)),
        }
    }

    let cols = model.config.hidden_size();
    let cap = model.config.norm_cap;
    apply_max_norm(&mut model.fc_weights, cols, cap);
    model.zero_pad_rows();
    Ok(())
}
