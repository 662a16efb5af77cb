use rand::Rng as _;

use super::TrainError;
use crate::model::Tensor;
use crate::rng::{self, Rng};
use crate::scalar::Scalar;

/// `(fan_in, fan_out)` for a tensor shape.
///
/// A matrix `[rows, cols]` maps `cols` inputs to `rows` outputs. A vector of
/// length `n` counts as `n` in both directions.
pub fn fans(shape: &[usize]) -> Result<(usize, usize), TrainError> {
    match shape {
        [] => Err(TrainError::EmptyShape),
        s if s.contains(&0) => Err(TrainError::EmptyShape),
        [n] => Ok((*n, *n)),
        [rows, cols] => Ok((*cols, *rows)),
        [rows, rest @ ..] => Ok((rest.iter().product(), *rows)),
    }
}

/// Glorot-uniform limit `sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_limit(shape: &[usize]) -> Result<f64, TrainError> {
    let (fan_in, fan_out) = fans(shape)?;
    Ok((6.0 / (fan_in + fan_out) as f64).sqrt())
}

/// Samples `U[-L, L]` from an existing generator.
pub fn glorot_uniform<T: Scalar>(shape: &[usize], rng: &mut Rng) -> Result<Tensor<T>, TrainError> {
    let limit = glorot_limit(shape)?;
    let len = shape.iter().product();
    let data = (0..len).map(|_| T::of(rng.random_range(-limit..=limit))).collect();
    Ok(Tensor::from_vec(shape, data))
}

pub fn glorot_uniform_init<T: Scalar>(shape: &[usize], seed: u64) -> Result<Tensor<T>, TrainError> {
    glorot_uniform(shape, &mut rng::seeded(seed))
}
