//! Additive attention: `e_i = reduce(tanh(u_i + q))`, `alpha = softmax(e)`,
//! `context = sum_i alpha_i u_i`.

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::scalar::Scalar;

/// How the vector `tanh(u_i + q)` is collapsed into the scalar score `e_i`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreReduction {
    /// Sum of the components.
    #[default]
    Sum,
    /// Mean of the components.
    Mean,
    /// Dot product with a learned score vector.
    Learned,
}

impl ScoreReduction {
    fn weights<'a, T: Scalar>(self, dim: usize, score_vector: Option<&'a [T]>) -> Result<Weights<'a, T>, ModelError> {
        Ok(match self {
            ScoreReduction::Sum => Weights::Uniform(T::one()),
            ScoreReduction::Mean => Weights::Uniform(T::one() / T::of(dim as f64)),
            ScoreReduction::Learned => match score_vector {
                Some(v) if v.len() == dim => Weights::Vector(v),
                _ => return Err(ModelError::Shape("learned score reduction needs a score vector".into())),
            },
        })
    }
}

enum Weights<'a, T> {
    Uniform(T),
    Vector(&'a [T]),
}

impl<T: Scalar> Weights<'_, T> {
    fn at(&self, j: usize) -> T {
        match self {
            Weights::Uniform(w) => *w,
            Weights::Vector(v) => v[j],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionTrace<T> {
    pub query: Vec<T>,
    pub values: Vec<Vec<T>>,
    /// `tanh(u_i + q)` per value.
    pub activations: Vec<Vec<T>>,
    pub scores: Vec<T>,
    pub weights: Vec<T>,
    pub context: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionGrads<T> {
    pub values: Vec<Vec<T>>,
    pub query: Vec<T>,
    /// Gradient with respect to the scores `e`; sums to zero.
    pub scores: Vec<T>,
    pub score_vector: Option<Vec<T>>,
}

pub fn softmax<T: Scalar>(scores: &[T]) -> Vec<T> {
    let max = scores.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = scores.iter().map(|&e| (e - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub fn additive_attention<T: Scalar>(
    query: &[T],
    values: &[Vec<T>],
    reduction: ScoreReduction,
    score_vector: Option<&[T]>,
) -> Result<AttentionTrace<T>, ModelError> {
    if values.is_empty() {
        return Err(ModelError::EmptySequence);
    }
    let d = query.len();
    if let Some(bad) = values.iter().find(|u| u.len() != d) {
        return Err(ModelError::Shape(format!("value of length {} against query of length {d}", bad.len())));
    }
    let w = reduction.weights(d, score_vector)?;
    let activations: Vec<Vec<T>> = values
        .iter()
        .map(|u| u.iter().zip(query).map(|(&a, &b)| (a + b).tanh()).collect())
        .collect();
    let scores: Vec<T> = activations
        .iter()
        .map(|t| t.iter().enumerate().map(|(j, &v)| w.at(j) * v).sum())
        .collect();
    let weights = softmax(&scores);
    let context = if values.len() == 1 {
        values[0].clone()
    } else {
        let mut ctx = vec![T::zero(); d];
        for (u, &a) in values.iter().zip(&weights) {
            for (c, &v) in ctx.iter_mut().zip(u) {
                *c += a * v;
            }
        }
        ctx
    };
    Ok(AttentionTrace {
        query: query.to_vec(),
        values: values.to_vec(),
        activations,
        scores,
        weights,
        context,
    })
}

pub fn attention_backward<T: Scalar>(
    trace: &AttentionTrace<T>,
    d_context: &[T],
    reduction: ScoreReduction,
    score_vector: Option<&[T]>,
) -> Result<AttentionGrads<T>, ModelError> {
    let d = trace.query.len();
    let w = reduction.weights(d, score_vector)?;
    let d_weights: Vec<T> = trace
        .values
        .iter()
        .map(|u| u.iter().zip(d_context).map(|(&a, &b)| a * b).sum())
        .collect();
    let mean: T = trace.weights.iter().zip(&d_weights).map(|(&a, &g)| a * g).sum();
    let d_scores: Vec<T> = trace.weights.iter().zip(&d_weights).map(|(&a, &g)| a * (g - mean)).collect();

    let mut d_query = vec![T::zero(); d];
    let mut d_score_vector = matches!(reduction, ScoreReduction::Learned).then(|| vec![T::zero(); d]);
    let mut d_values = Vec::with_capacity(trace.values.len());
    for ((act, &alpha), &de) in trace.activations.iter().zip(&trace.weights).zip(&d_scores) {
        let mut du: Vec<T> = d_context.iter().map(|&g| alpha * g).collect();
        for j in 0..d {
            let dpre = de * w.at(j) * (T::one() - act[j] * act[j]);
            du[j] += dpre;
            d_query[j] += dpre;
        }
        if let Some(dv) = d_score_vector.as_mut() {
            for (g, &a) in dv.iter_mut().zip(act) {
                *g += de * a;
            }
        }
        d_values.push(du);
    }
    Ok(AttentionGrads {
        values: d_values,
        query: d_query,
        scores: d_scores,
        score_vector: d_score_vector,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_returns_value() {
        let u = vec![vec![0.3, -1.2, 5.0]];
        let tr = additive_attention(&[9.0, 1.0, -2.0], &u, ScoreReduction::Sum, None).unwrap();
        assert_eq!(tr.weights, [1.0]);
        assert_eq!(tr.context, u[0]);
    }

    #[test]
    fn equal_values_split_evenly() {
        let u = vec![vec![0.4, 0.1], vec![0.4, 0.1]];
        let tr = additive_attention(&[0.7f64, -0.2], &u, ScoreReduction::Sum, None).unwrap();
        assert_eq!(tr.weights, [0.5, 0.5]);
        assert!((tr.context[0] - 0.4).abs() < 1e-15 && (tr.context[1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn scalar_worked_example() {
        let tr = additive_attention(&[0.0f64], &[vec![1.0], vec![-1.0]], ScoreReduction::Sum, None).unwrap();
        // e = (tanh 1, -tanh 1); alpha_1 = 1 / (1 + exp(-2 tanh 1)).
        let t1 = 1.0f64.tanh();
        let a1 = 1.0 / (1.0 + (-2.0 * t1).exp());
        assert!((tr.scores[0] - 0.76159).abs() < 1e-5 && (tr.scores[1] + 0.76159).abs() < 1e-5);
        assert!((tr.weights[0] - a1).abs() < 1e-15 && (tr.weights[1] - (1.0 - a1)).abs() < 1e-15);
        assert!((tr.weights[0] - 0.82101).abs() < 1e-5 && (tr.weights[1] - 0.17899).abs() < 1e-5);
        assert!((tr.context[0] - (2.0 * a1 - 1.0)).abs() < 1e-15);
        assert!((tr.context[0] - 0.64201).abs() < 1e-5);
    }

    #[test]
    fn reductions_agree_in_one_dimension() {
        let u = [vec![0.3], vec![-0.8], vec![1.1]];
        let sum = additive_attention(&[0.2], &u, ScoreReduction::Sum, None).unwrap();
        let mean = additive_attention(&[0.2], &u, ScoreReduction::Mean, None).unwrap();
        let learned = additive_attention(&[0.2], &u, ScoreReduction::Learned, Some(&[1.0])).unwrap();
        assert_eq!(sum.weights, mean.weights);
        assert_eq!(sum.weights, learned.weights);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            additive_attention::<f64>(&[0.0], &[], ScoreReduction::Sum, None),
            Err(ModelError::EmptySequence)
        ));
        assert!(additive_attention(&[0.0], &[vec![1.0, 2.0]], ScoreReduction::Sum, None).is_err());
        assert!(additive_attention(&[0.0], &[vec![1.0]], ScoreReduction::Learned, None).is_err());
    }

    #[test]
    fn score_gradient_sums_to_zero() {
        let u = vec![vec![0.3, -0.1], vec![0.9, 0.4], vec![-0.5, 0.2]];
        let tr = additive_attention(&[0.1, 0.2], &u, ScoreReduction::Sum, None).unwrap();
        let g = attention_backward(&tr, &[0.7, -1.3], ScoreReduction::Sum, None).unwrap();
        assert!(g.scores.iter().sum::<f64>().abs() < 1e-15);
    }

    #[test]
    fn shift_invariance() {
        let a = softmax(&[0.1f64, -2.0, 3.5]);
        let b = softmax(&[100.1, 98.0, 103.5]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
