//! Cosine-loss training with Adam, mini-batches and early stopping.

mod adam;
mod init;

use std::io::Write;

use log::{info, warn};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adam::{adam_step, adam_update, AdamConfig, AdamState};
pub use init::{fans, glorot_limit, glorot_uniform, glorot_uniform_init};

use crate::dataset::{DatasetSplit, DefinitionTuple};
use crate::embeddings::{dot, norm, EmbeddingTable};
use crate::model::{Gradients, ModelError, ModelParameters};
use crate::rng;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("tensor shape has a zero or missing dimension")]
    EmptyShape,
    #[error("cosine loss is undefined for a zero vector")]
    ZeroNorm,
    #[error("vectors have different lengths ({0} and {1})")]
    LengthMismatch(usize, usize),
    #[error("no tuples to evaluate")]
    EmptyTuples,
    #[error("the {0} set is empty")]
    EmptySet(&'static str),
    #[error("word {0:?} has no target vector")]
    MissingTarget(String),
    #[error("definition of {0:?} has no token in the input vocabulary")]
    NoKnownTokens(String),
    #[error("non-finite gradient in tensor {tensor}")]
    NonFiniteGradient { tensor: String },
    #[error("loss became non-finite at epoch {0}")]
    NonFiniteLoss(usize),
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `1 - cos(v, t)`, in `[0, 2]`.
pub fn cosine_loss<T: Scalar>(v: &[T], t: &[T]) -> Result<T, TrainError> {
    Ok(cosine_loss_grad(v, t)?.0)
}

/// Loss and its gradient with respect to `v`:
/// `-(t / (|v||t|) - (v.t) v / (|v|^3 |t|))`.
pub fn cosine_loss_grad<T: Scalar>(v: &[T], t: &[T]) -> Result<(T, Vec<T>), TrainError> {
    if v.len() != t.len() {
        return Err(TrainError::LengthMismatch(v.len(), t.len()));
    }
    let (nv, nt) = (norm(v), norm(t));
    if nv.is_zero() || nt.is_zero() {
        return Err(TrainError::ZeroNorm);
    }
    let vt = dot(v, t);
    let cos = (vt / (nv * nt)).max(-T::one()).min(T::one());
    let grad = v
        .iter()
        .zip(t)
        .map(|(&vi, &ti)| -(ti / (nv * nt) - vt * vi / (nv * nv * nv * nt)))
        .collect();
    Ok((T::one() - cos, grad))
}

/// A tuple resolved against a model vocabulary and a target table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub ids: Vec<usize>,
    pub target: usize,
}

/// Token ids and target rows for every tuple. Tokens outside the input
/// vocabulary are skipped; a tuple with none left is an error.
pub fn encode_tuples<T: Scalar>(
    model: &ModelParameters<T>,
    tuples: &[DefinitionTuple],
    targets: &EmbeddingTable<T>,
) -> Result<Vec<Example>, TrainError> {
    tuples
        .iter()
        .map(|t| {
            let target = targets.id(&t.word).ok_or_else(|| TrainError::MissingTarget(t.word.clone()))?;
            let ids = model.token_ids(t.phrase.iter().map(String::as_str));
            if ids.is_empty() {
                return Err(TrainError::NoKnownTokens(t.word.clone()));
            }
            Ok(Example { ids, target })
        })
        .collect()
}

fn examples_loss<T: Scalar>(model: &ModelParameters<T>, examples: &[Example], targets: &EmbeddingTable<T>) -> Result<f64, TrainError> {
    if examples.is_empty() {
        return Err(TrainError::EmptyTuples);
    }
    let mut total = 0.0f64;
    for ex in examples {
        let v = model.encode(&ex.ids)?;
        total += cosine_loss(&v, targets.row(ex.target))?.as_f64();
    }
    Ok(total / examples.len() as f64)
}

/// Mean cosine loss over `tuples`. Does not modify the model.
pub fn dataset_loss<T: Scalar>(
    model: &ModelParameters<T>,
    tuples: &[DefinitionTuple],
    targets: &EmbeddingTable<T>,
) -> Result<f64, TrainError> {
    examples_loss(model, &encode_tuples(model, tuples, targets)?, targets)
}

/// Summed loss and gradients over a batch, before averaging.
pub fn batch_gradients<T: Scalar>(
    model: &ModelParameters<T>,
    batch: &[&Example],
    targets: &EmbeddingTable<T>,
) -> Result<(f64, Gradients<T>), TrainError> {
    let mut grads = Gradients::zeros(&model.encoder);
    let mut loss = 0.0;
    for ex in batch {
        let trace = model.forward(&ex.ids)?;
        let (l, upstream) = cosine_loss_grad(&trace.output, targets.row(ex.target))?;
        loss += l.as_f64();
        grads.accumulate(&model.backward(&ex.ids, &trace, &upstream)?);
    }
    Ok((loss, grads))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub patience: usize,
    pub min_delta: f64,
    pub max_epochs: usize,
    /// Rescale the batch gradient when its global norm exceeds this value.
    pub clip_norm: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            learning_rate: adam.learning_rate,
            batch_size: 16,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
            patience: 3,
            min_delta: 1e-4,
            max_epochs: 50,
            clip_norm: None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.to_owned()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.patience == 0 {
            return bad("patience must be at least 1");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be at least 1");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || self.epsilon <= 0.0 {
            return bad("Adam needs 0 <= beta < 1 and epsilon > 0");
        }
        if self.min_delta < 0.0 {
            return bad("min_delta must be non-negative");
        }
        if self.clip_norm.is_some_and(|c| c.is_nan() || c <= 0.0) {
            return bad("clip_norm must be positive");
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Progress {
    Improved,
    NoImprovement,
    Stop,
}

/// Tracks the best development loss and decides when to stop.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    pub patience: usize,
    pub min_delta: f64,
    best: Option<(usize, f64)>,
    stale: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize, min_delta: f64) -> Self {
        Self {
            patience,
            min_delta,
            best: None,
            stale: 0,
        }
    }

    /// An epoch improves when its loss is below `best - min_delta`.
    pub fn observe(&mut self, epoch: usize, loss: f64) -> Progress {
        match self.best {
            Some((_, best)) if loss >= best - self.min_delta => {
                self.stale += 1;
                if self.stale >= self.patience {
                    Progress::Stop
                } else {
                    Progress::NoImprovement
                }
            }
            _ => {
                self.best = Some((epoch, loss));
                self.stale = 0;
                Progress::Improved
            }
        }
    }

    pub fn best(&self) -> Option<(usize, f64)> {
        self.best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EarlyStopping,
    MaxEpochs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_dev_loss: f64,
    pub stop_reason: StopReason,
    pub steps: u64,
}

impl TrainReport {
    /// One `{"epoch", "train_loss", "dev_loss"}` object per line.
    pub fn write_jsonl(&self, mut out: impl Write) -> std::io::Result<()> {
        for e in &self.epochs {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Trains `model` on `split.train`, monitoring `split.dev`, and returns the
/// parameters of the best development epoch.
///
/// `targets` holds the frozen output vectors and is never modified.
/// `on_epoch` is called after every epoch, for progress output.
pub fn train<T: Scalar>(
    mut model: ModelParameters<T>,
    split: &DatasetSplit,
    targets: &EmbeddingTable<T>,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(ModelParameters<T>, TrainReport), TrainError> {
    cfg.validate()?;
    if split.train.is_empty() {
        return Err(TrainError::EmptySet("train"));
    }
    if split.dev.is_empty() {
        return Err(TrainError::EmptySet("dev"));
    }
    if !targets.is_frozen() {
        warn!("target table is not frozen; it is still never modified by training");
    }
    let train_set = encode_tuples(&model, &split.train, targets)?;
    let dev_set = encode_tuples(&model, &split.dev, targets)?;
    let adam = cfg.adam();
    let mut state = AdamState::new(&model);
    let mut stopper = EarlyStopping::new(cfg.patience, cfg.min_delta);
    let mut rng = rng::derived(cfg.seed, 2);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut epochs = Vec::new();
    let mut best_model = model.clone();
    let mut stop_reason = StopReason::MaxEpochs;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&Example> = chunk.iter().map(|&i| &train_set[i]).collect();
            let (_, mut grads) = batch_gradients(&model, &batch, targets)?;
            grads.scale(T::one() / T::of(batch.len() as f64));
            if let Some(limit) = cfg.clip_norm {
                let n = grads.global_norm().as_f64();
                if n > limit {
                    grads.scale(T::of(limit / n));
                }
            }
            adam_step(&mut model, &grads, &mut state, &adam)?;
        }
        let record = EpochRecord {
            epoch,
            train_loss: examples_loss(&model, &train_set, targets)?,
            dev_loss: examples_loss(&model, &dev_set, targets)?,
        };
        if !record.train_loss.is_finite() || !record.dev_loss.is_finite() {
            return Err(TrainError::NonFiniteLoss(epoch));
        }
        info!("epoch {epoch}: train {:.6} dev {:.6}", record.train_loss, record.dev_loss);
        on_epoch(&record);
        epochs.push(record);
        match stopper.observe(epoch, record.dev_loss) {
            Progress::Improved => best_model = model.clone(),
            Progress::NoImprovement => {}
            Progress::Stop => {
                stop_reason = StopReason::EarlyStopping;
                break;
            }
        }
    }
    let (best_epoch, best_dev_loss) = stopper.best().expect("at least one epoch ran");
    Ok((
        best_model,
        TrainReport {
            epochs,
            best_epoch,
            best_dev_loss,
            stop_reason,
            steps: state.step,
        },
    ))
}
