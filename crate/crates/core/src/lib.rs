//! Neural reverse dictionary.
//!
//! Maps a descriptive phrase to a ranked list of candidate words. The crate
//! covers the whole pipeline: Persian text normalisation, corpus frequency
//! ranking, dataset preparation, four phrase encoders (bag of words, LSTM,
//! LSTM with additive attention, BiLSTM with additive attention) with
//! hand-written gradients, cosine-loss training with Adam, and evaluation by
//! accuracy@k, synonym accuracy@k and kappa-validated mean opinion scores.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the precision used for training and for gradient checks.

pub mod corpus;
pub mod dataset;
pub mod embeddings;
pub mod eval;
pub mod model;
pub mod rng;
pub mod scalar;
pub mod text;
pub mod train;
mod util;

pub use scalar::Scalar;

/// Single precision embedding table used for training and ranking.
pub type Embeddings = embeddings::EmbeddingTable<f32>;
/// Double precision embedding table.
pub type Embeddings64 = embeddings::EmbeddingTable<f64>;
/// Single precision model parameters used for training and inference.
pub type Model = model::ModelParameters<f32>;
/// Double precision model parameters, used for gradient checking.
pub type Model64 = model::ModelParameters<f64>;
