use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::model::{Encoder, Gradients, ModelParameters};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1.0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One bias-corrected Adam update of a parameter slice. `step` is the
/// 1-based count of updates including this one.
pub fn adam_update<T: Scalar>(param: &mut [T], grad: &[T], m: &mut [T], v: &mut [T], step: u64, cfg: &AdamConfig) {
    let b1 = T::of(cfg.beta1);
    let b2 = T::of(cfg.beta2);
    let c1 = T::of(1.0 - cfg.beta1.powf(step as f64));
    let c2 = T::of(1.0 - cfg.beta2.powf(step as f64));
    let lr = T::of(cfg.learning_rate);
    let eps = T::of(cfg.epsilon);
    for i in 0..param.len() {
        let g = grad[i];
        m[i] = b1 * m[i] + (T::one() - b1) * g;
        v[i] = b2 * v[i] + (T::one() - b2) * g * g;
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        param[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// First and second moments for every trainable tensor.
///
/// Embedding moments are kept only for rows that have received a gradient.
/// Rows never touched have zero moments, for which the dense update is zero,
/// so the result matches dense Adam exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub step: u64,
    m: Encoder<T>,
    v: Encoder<T>,
    rows: BTreeMap<usize, (Vec<T>, Vec<T>)>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(model: &ModelParameters<T>) -> Self {
        Self {
            step: 0,
            m: model.encoder.zeros_like(),
            v: model.encoder.zeros_like(),
            rows: BTreeMap::new(),
        }
    }

    /// Number of embedding rows with optimizer state.
    pub fn touched_rows(&self) -> usize {
        self.rows.len()
    }
}

pub fn adam_step<T: Scalar>(
    model: &mut ModelParameters<T>,
    grads: &Gradients<T>,
    state: &mut AdamState<T>,
    cfg: &AdamConfig,
) -> Result<(), TrainError> {
    if let Some(tensor) = grads.first_non_finite() {
        return Err(TrainError::NonFiniteGradient { tensor });
    }
    state.step += 1;
    let step = state.step;
    let params = model.encoder.tensors_mut();
    let g = grads.encoder.tensors();
    let m = state.m.tensors_mut();
    let v = state.v.tensors_mut();
    for ((((_, p), (_, g)), (_, m)), (_, v)) in params.into_iter().zip(g).zip(m).zip(v) {
        adam_update(p.data_mut(), g.data(), m.data_mut(), v.data_mut(), step, cfg);
    }
    let dim = model.config.dim;
    for &row in grads.embeddings.keys() {
        state.rows.entry(row).or_insert_with(|| (vec![T::zero(); dim], vec![T::zero(); dim]));
    }
    let zeros = vec![T::zero(); dim];
    for (&row, (m, v)) in state.rows.iter_mut() {
        let g = grads.embeddings.get(&row).map_or(zeros.as_slice(), Vec::as_slice);
        adam_update(model.embeddings.row_mut(row), g, m, v, step, cfg);
    }
    Ok(())
}
