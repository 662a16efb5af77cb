//! Phrase encoders and their exact gradients.
//!
//! Four architectures map a sequence of `d`-dimensional input vectors to one
//! output vector `v_o`:
//!
//! * **BOW**: `v_o = W (v_1 + ... + v_k)`.
//! * **RNN**: `v_o = tanh(W h_k + b)` over the last LSTM hidden state.
//! * **LSTM+att**: `p_t = W h_t + b`, `p'_k = W' h_k + b'`,
//!   `a = attention(p'_k, p_1..p_k)`, `v_o = tanh(W'' a + b'')`.
//! * **BiLSTM+att**: as LSTM+att over `c_t = [h_t; h'_t]`, with `W` and `W'`
//!   of shape `d x 2d`.
//!
//! Every forward pass returns a trace; [`Encoder::backward`] turns a trace and
//! the gradient at `v_o` into gradients for all parameters and inputs.

mod attention;
mod checkpoint;
mod lstm;
mod tensor;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use attention::{additive_attention, attention_backward, softmax, AttentionGrads, AttentionTrace, ScoreReduction};
pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_VERSION};
pub use lstm::{LstmParams, LstmTrace};
pub use tensor::Tensor;

use crate::embeddings::EmbeddingTable;
use crate::rng;
use crate::scalar::Scalar;
use crate::train::glorot_uniform;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("input sequence is empty")]
    EmptySequence,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("trace was produced by a {trace} model, parameters are {params}")]
    TraceMismatch { trace: Architecture, params: Architecture },
    #[error("token id {0} is outside the input vocabulary")]
    TokenId(usize),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Architecture {
    #[serde(rename = "bow")]
    Bow,
    #[serde(rename = "rnn")]
    Rnn,
    #[serde(rename = "lstm-att")]
    LstmAtt,
    #[serde(rename = "bilstm-att")]
    BiLstmAtt,
}

impl Architecture {
    pub const ALL: [Architecture; 4] = [Architecture::Bow, Architecture::Rnn, Architecture::LstmAtt, Architecture::BiLstmAtt];

    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::Bow => "bow",
            Architecture::Rnn => "rnn",
            Architecture::LstmAtt => "lstm-att",
            Architecture::BiLstmAtt => "bilstm-att",
        }
    }

    /// Column label used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            Architecture::Bow => "BOW",
            Architecture::Rnn => "RNN",
            Architecture::LstmAtt => "LSTM+att",
            Architecture::BiLstmAtt => "BiLSTM+att",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Architecture {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Architecture::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| format!("unknown architecture {s:?} (expected bow, rnn, lstm-att or bilstm-att)"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub architecture: Architecture,
    pub dim: usize,
    pub input_vocab_size: usize,
    pub output_word_count: usize,
    #[serde(default)]
    pub score_reduction: ScoreReduction,
}

/// Output projection plus attention used by the two attention models.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionHead<T> {
    pub reduction: ScoreReduction,
    /// `W`: `d x s` where `s` is the state size (`d` or `2d`).
    pub w_value: Tensor<T>,
    pub b_value: Tensor<T>,
    /// `W'`: `d x s`.
    pub w_query: Tensor<T>,
    pub b_query: Tensor<T>,
    /// `W''`: `d x d`.
    pub w_out: Tensor<T>,
    pub b_out: Tensor<T>,
    /// Present only for [`ScoreReduction::Learned`].
    pub score_vector: Option<Tensor<T>>,
}

impl<T: Scalar> AttentionHead<T> {
    pub fn zeros(dim: usize, state: usize, reduction: ScoreReduction) -> Self {
        Self {
            reduction,
            w_value: Tensor::zeros(&[dim, state]),
            b_value: Tensor::zeros(&[dim]),
            w_query: Tensor::zeros(&[dim, state]),
            b_query: Tensor::zeros(&[dim]),
            w_out: Tensor::zeros(&[dim, dim]),
            b_out: Tensor::zeros(&[dim]),
            score_vector: matches!(reduction, ScoreReduction::Learned).then(|| Tensor::zeros(&[dim])),
        }
    }

    fn forward(&self, states: Vec<Vec<T>>) -> Result<(Vec<T>, HeadTrace<T>), ModelError> {
        let projections: Vec<Vec<T>> = states.iter().map(|s| affine(&self.w_value, &self.b_value, s)).collect();
        let query = affine(&self.w_query, &self.b_query, states.last().ok_or(ModelError::EmptySequence)?);
        let attention = additive_attention(
            &query,
            &projections,
            self.reduction,
            self.score_vector.as_ref().map(Tensor::data),
        )?;
        let output: Vec<T> = affine(&self.w_out, &self.b_out, &attention.context)
            .into_iter()
            .map(T::tanh)
            .collect();
        Ok((
            output,
            HeadTrace {
                states,
                projections,
                attention,
            },
        ))
    }

    /// Returns parameter gradients and the gradient for each state.
    fn backward(&self, trace: &HeadTrace<T>, output: &[T], upstream: &[T]) -> Result<(Self, Vec<Vec<T>>), ModelError> {
        let mut g = Self::zeros(self.w_out.rows(), self.w_value.cols(), self.reduction);
        let dz: Vec<T> = upstream.iter().zip(output).map(|(&u, &v)| u * (T::one() - v * v)).collect();
        g.w_out.outer_acc(&dz, &trace.attention.context);
        g.b_out.add_slice(&dz);
        let mut d_context = vec![T::zero(); self.w_out.cols()];
        self.w_out.matvec_t_acc(&dz, &mut d_context);

        let att = attention_backward(
            &trace.attention,
            &d_context,
            self.reduction,
            self.score_vector.as_ref().map(Tensor::data),
        )?;
        if let (Some(gs), Some(ds)) = (g.score_vector.as_mut(), att.score_vector.as_ref()) {
            gs.add_slice(ds);
        }
        let state_len = self.w_value.cols();
        let mut d_states = vec![vec![T::zero(); state_len]; trace.states.len()];
        for ((state, dp), ds) in trace.states.iter().zip(&att.values).zip(d_states.iter_mut()) {
            g.w_value.outer_acc(dp, state);
            g.b_value.add_slice(dp);
            self.w_value.matvec_t_acc(dp, ds);
        }
        let last = trace.states.len() - 1;
        g.w_query.outer_acc(&att.query, &trace.states[last]);
        g.b_query.add_slice(&att.query);
        self.w_query.matvec_t_acc(&att.query, &mut d_states[last]);
        Ok((g, d_states))
    }

    fn tensors(&self) -> Vec<(&'static str, &Tensor<T>)> {
        let mut out = vec![
            ("w_value", &self.w_value),
            ("b_value", &self.b_value),
            ("w_query", &self.w_query),
            ("b_query", &self.b_query),
            ("w_out", &self.w_out),
            ("b_out", &self.b_out),
        ];
        if let Some(v) = &self.score_vector {
            out.push(("score_vector", v));
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Tensor<T>)> {
        let mut out = vec![
            ("w_value", &mut self.w_value),
            ("b_value", &mut self.b_value),
            ("w_query", &mut self.w_query),
            ("b_query", &mut self.b_query),
            ("w_out", &mut self.w_out),
            ("b_out", &mut self.b_out),
        ];
        if let Some(v) = &mut self.score_vector {
            out.push(("score_vector", v));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadTrace<T> {
    /// `h_t` (LSTM+att) or `c_t = [h_t; h'_t]` (BiLSTM+att).
    pub states: Vec<Vec<T>>,
    /// `p_t`.
    pub projections: Vec<Vec<T>>,
    pub attention: AttentionTrace<T>,
}

/// Trainable tensors of one architecture, excluding the input embeddings.
#[derive(Debug, Clone, PartialEq)]
pub enum Encoder<T> {
    Bow {
        w: Tensor<T>,
    },
    Rnn {
        lstm: LstmParams<T>,
        w_out: Tensor<T>,
        b_out: Tensor<T>,
    },
    LstmAtt {
        lstm: LstmParams<T>,
        head: AttentionHead<T>,
    },
    BiLstmAtt {
        forward: LstmParams<T>,
        backward: LstmParams<T>,
        head: AttentionHead<T>,
    },
}

/// Architecture-specific activations recorded by [`Encoder::forward`].
#[derive(Debug, Clone, PartialEq)]
pub enum TraceDetail<T> {
    Bow {
        sum: Vec<T>,
    },
    Rnn {
        lstm: LstmTrace<T>,
    },
    LstmAtt {
        lstm: LstmTrace<T>,
        head: HeadTrace<T>,
    },
    BiLstmAtt {
        forward: LstmTrace<T>,
        /// Run over the reversed sequence: step `j` is position `k - 1 - j`.
        backward: LstmTrace<T>,
        head: HeadTrace<T>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace<T> {
    pub architecture: Architecture,
    pub inputs: Vec<Vec<T>>,
    pub detail: TraceDetail<T>,
    pub output: Vec<T>,
}

impl<T> ForwardTrace<T> {
    /// Attention weights, for the attention architectures.
    pub fn attention_weights(&self) -> Option<&[T]> {
        match &self.detail {
            TraceDetail::LstmAtt { head, .. } | TraceDetail::BiLstmAtt { head, .. } => Some(&head.attention.weights),
            _ => None,
        }
    }
}

fn affine<T: Scalar>(w: &Tensor<T>, b: &Tensor<T>, x: &[T]) -> Vec<T> {
    let mut y = w.matvec(x);
    for (v, &bi) in y.iter_mut().zip(b.data()) {
        *v += bi;
    }
    y
}

impl<T: Scalar> Encoder<T> {
    pub fn zeros(architecture: Architecture, dim: usize, reduction: ScoreReduction) -> Self {
        match architecture {
            Architecture::Bow => Encoder::Bow {
                w: Tensor::zeros(&[dim, dim]),
            },
            Architecture::Rnn => Encoder::Rnn {
                lstm: LstmParams::zeros(dim, dim),
                w_out: Tensor::zeros(&[dim, dim]),
                b_out: Tensor::zeros(&[dim]),
            },
            Architecture::LstmAtt => Encoder::LstmAtt {
                lstm: LstmParams::zeros(dim, dim),
                head: AttentionHead::zeros(dim, dim, reduction),
            },
            Architecture::BiLstmAtt => Encoder::BiLstmAtt {
                forward: LstmParams::zeros(dim, dim),
                backward: LstmParams::zeros(dim, dim),
                head: AttentionHead::zeros(dim, 2 * dim, reduction),
            },
        }
    }

    /// Glorot-uniform matrices (and score vector), zero biases.
    pub fn glorot(architecture: Architecture, dim: usize, reduction: ScoreReduction, seed: u64) -> Self {
        let mut enc = Self::zeros(architecture, dim, reduction);
        let mut rng = rng::seeded(seed);
        for (name, t) in enc.tensors_mut() {
            if !is_bias(&name) {
                *t = glorot_uniform(t.shape(), &mut rng).expect("encoder tensors are non-empty");
            }
        }
        enc
    }

    pub fn architecture(&self) -> Architecture {
        match self {
            Encoder::Bow { .. } => Architecture::Bow,
            Encoder::Rnn { .. } => Architecture::Rnn,
            Encoder::LstmAtt { .. } => Architecture::LstmAtt,
            Encoder::BiLstmAtt { .. } => Architecture::BiLstmAtt,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Encoder::Bow { w } => w.rows(),
            Encoder::Rnn { w_out, .. } => w_out.rows(),
            Encoder::LstmAtt { head, .. } | Encoder::BiLstmAtt { head, .. } => head.w_out.rows(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for (_, t) in z.tensors_mut() {
            *t = t.zeros_like();
        }
        z
    }

    /// Named tensors in a fixed order.
    pub fn tensors(&self) -> Vec<(String, &Tensor<T>)> {
        let mut out: Vec<(String, &Tensor<T>)> = Vec::new();
        match self {
            Encoder::Bow { w } => out.push(("bow.w".into(), w)),
            Encoder::Rnn { lstm, w_out, b_out } => {
                out.extend(lstm_tensors("lstm", lstm));
                out.push(("rnn.w_out".into(), w_out));
                out.push(("rnn.b_out".into(), b_out));
            }
            Encoder::LstmAtt { lstm, head } => {
                out.extend(lstm_tensors("lstm", lstm));
                out.extend(head.tensors().into_iter().map(|(n, t)| (format!("att.{n}"), t)));
            }
            Encoder::BiLstmAtt { forward, backward, head } => {
                out.extend(lstm_tensors("lstm_fwd", forward));
                out.extend(lstm_tensors("lstm_bwd", backward));
                out.extend(head.tensors().into_iter().map(|(n, t)| (format!("att.{n}"), t)));
            }
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut Tensor<T>)> {
        let mut out: Vec<(String, &mut Tensor<T>)> = Vec::new();
        match self {
            Encoder::Bow { w } => out.push(("bow.w".into(), w)),
            Encoder::Rnn { lstm, w_out, b_out } => {
                out.extend(lstm_tensors_mut("lstm", lstm));
                out.push(("rnn.w_out".into(), w_out));
                out.push(("rnn.b_out".into(), b_out));
            }
            Encoder::LstmAtt { lstm, head } => {
                out.extend(lstm_tensors_mut("lstm", lstm));
                out.extend(head.tensors_mut().into_iter().map(|(n, t)| (format!("att.{n}"), t)));
            }
            Encoder::BiLstmAtt { forward, backward, head } => {
                out.extend(lstm_tensors_mut("lstm_fwd", forward));
                out.extend(lstm_tensors_mut("lstm_bwd", backward));
                out.extend(head.tensors_mut().into_iter().map(|(n, t)| (format!("att.{n}"), t)));
            }
        }
        out
    }

    pub fn forward(&self, inputs: &[Vec<T>]) -> Result<ForwardTrace<T>, ModelError> {
        if inputs.is_empty() {
            return Err(ModelError::EmptySequence);
        }
        let d = self.dim();
        if let Some(bad) = inputs.iter().find(|v| v.len() != d) {
            return Err(ModelError::Shape(format!("input of length {} for a {d}-dimensional model", bad.len())));
        }
        let (output, detail) = match self {
            Encoder::Bow { w } => {
                let mut sum = vec![T::zero(); d];
                for v in inputs {
                    for (s, &x) in sum.iter_mut().zip(v) {
                        *s += x;
                    }
                }
                (w.matvec(&sum), TraceDetail::Bow { sum })
            }
            Encoder::Rnn { lstm, w_out, b_out } => {
                let tr = lstm.forward(inputs);
                let out = affine(w_out, b_out, tr.last_hidden()).into_iter().map(T::tanh).collect();
                (out, TraceDetail::Rnn { lstm: tr })
            }
            Encoder::LstmAtt { lstm, head } => {
                let tr = lstm.forward(inputs);
                let (out, head_trace) = head.forward(tr.hidden.clone())?;
                (out, TraceDetail::LstmAtt { lstm: tr, head: head_trace })
            }
            Encoder::BiLstmAtt { forward, backward, head } => {
                let fwd = forward.forward(inputs);
                let reversed: Vec<Vec<T>> = inputs.iter().rev().cloned().collect();
                let bwd = backward.forward(&reversed);
                let k = inputs.len();
                let states = (0..k)
                    .map(|t| {
                        let mut c = fwd.hidden[t].clone();
                        c.extend_from_slice(&bwd.hidden[k - 1 - t]);
                        c
                    })
                    .collect();
                let (out, head_trace) = head.forward(states)?;
                (
                    out,
                    TraceDetail::BiLstmAtt {
                        forward: fwd,
                        backward: bwd,
                        head: head_trace,
                    },
                )
            }
        };
        Ok(ForwardTrace {
            architecture: self.architecture(),
            inputs: inputs.to_vec(),
            detail,
            output,
        })
    }

    /// Gradients of `upstream . v_o` with respect to every tensor and input.
    pub fn backward(&self, trace: &ForwardTrace<T>, upstream: &[T]) -> Result<(Encoder<T>, Vec<Vec<T>>), ModelError> {
        let mismatch = || ModelError::TraceMismatch {
            trace: trace.architecture,
            params: self.architecture(),
        };
        if upstream.len() != self.dim() || trace.output.len() != self.dim() {
            return Err(ModelError::Shape("upstream gradient does not match the output size".into()));
        }
        match (self, &trace.detail) {
            (Encoder::Bow { w }, TraceDetail::Bow { sum }) => {
                let mut gw = w.zeros_like();
                gw.outer_acc(upstream, sum);
                let mut d_sum = vec![T::zero(); w.cols()];
                w.matvec_t_acc(upstream, &mut d_sum);
                Ok((Encoder::Bow { w: gw }, vec![d_sum; trace.inputs.len()]))
            }
            (Encoder::Rnn { lstm, w_out, b_out }, TraceDetail::Rnn { lstm: tr }) => {
                let dz: Vec<T> = upstream
                    .iter()
                    .zip(&trace.output)
                    .map(|(&u, &v)| u * (T::one() - v * v))
                    .collect();
                let mut g_w = w_out.zeros_like();
                g_w.outer_acc(&dz, tr.last_hidden());
                let mut g_b = b_out.zeros_like();
                g_b.add_slice(&dz);
                let k = tr.hidden.len();
                let mut dh = vec![vec![T::zero(); lstm.hidden_size()]; k];
                w_out.matvec_t_acc(&dz, &mut dh[k - 1]);
                let (g_lstm, d_inputs) = lstm.backward(tr, &dh);
                Ok((
                    Encoder::Rnn {
                        lstm: g_lstm,
                        w_out: g_w,
                        b_out: g_b,
                    },
                    d_inputs,
                ))
            }
            (Encoder::LstmAtt { lstm, head }, TraceDetail::LstmAtt { lstm: tr, head: ht }) => {
                let (g_head, d_states) = head.backward(ht, &trace.output, upstream)?;
                let (g_lstm, d_inputs) = lstm.backward(tr, &d_states);
                Ok((
                    Encoder::LstmAtt {
                        lstm: g_lstm,
                        head: g_head,
                    },
                    d_inputs,
                ))
            }
            (
                Encoder::BiLstmAtt { forward, backward, head },
                TraceDetail::BiLstmAtt {
                    forward: ftr,
                    backward: btr,
                    head: ht,
                },
            ) => {
                let (g_head, d_states) = head.backward(ht, &trace.output, upstream)?;
                let h = forward.hidden_size();
                let k = d_states.len();
                let d_fwd: Vec<Vec<T>> = d_states.iter().map(|c| c[..h].to_vec()).collect();
                let d_bwd: Vec<Vec<T>> = (0..k).map(|j| d_states[k - 1 - j][h..].to_vec()).collect();
                let (g_fwd, mut d_inputs) = forward.backward(ftr, &d_fwd);
                let (g_bwd, d_rev) = backward.backward(btr, &d_bwd);
                for (j, dr) in d_rev.iter().enumerate() {
                    for (a, &b) in d_inputs[k - 1 - j].iter_mut().zip(dr) {
                        *a += b;
                    }
                }
                Ok((
                    Encoder::BiLstmAtt {
                        forward: g_fwd,
                        backward: g_bwd,
                        head: g_head,
                    },
                    d_inputs,
                ))
            }
            _ => Err(mismatch()),
        }
    }

    pub fn convert<U: Scalar>(&self) -> Encoder<U> {
        let mut out = Encoder::<U>::zeros(self.architecture(), self.dim(), self.reduction());
        for ((_, dst), (_, src)) in out.tensors_mut().into_iter().zip(self.tensors()) {
            *dst = src.convert();
        }
        out
    }

    pub fn reduction(&self) -> ScoreReduction {
        match self {
            Encoder::LstmAtt { head, .. } | Encoder::BiLstmAtt { head, .. } => head.reduction,
            _ => ScoreReduction::default(),
        }
    }
}

fn is_bias(name: &str) -> bool {
    let last = name.rsplit('.').next().unwrap_or(name);
    last == "bias" || last.starts_with("b_")
}

fn lstm_tensors<'a, T: Scalar>(prefix: &str, p: &'a LstmParams<T>) -> Vec<(String, &'a Tensor<T>)> {
    vec![
        (format!("{prefix}.w_input"), &p.w_input),
        (format!("{prefix}.w_hidden"), &p.w_hidden),
        (format!("{prefix}.bias"), &p.bias),
    ]
}

fn lstm_tensors_mut<'a, T: Scalar>(prefix: &str, p: &'a mut LstmParams<T>) -> Vec<(String, &'a mut Tensor<T>)> {
    vec![
        (format!("{prefix}.w_input"), &mut p.w_input),
        (format!("{prefix}.w_hidden"), &mut p.w_hidden),
        (format!("{prefix}.bias"), &mut p.bias),
    ]
}

/// Gradients for one or more examples: dense encoder tensors and sparse
/// input-embedding rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub encoder: Encoder<T>,
    pub embeddings: BTreeMap<usize, Vec<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros(encoder: &Encoder<T>) -> Self {
        Self {
            encoder: encoder.zeros_like(),
            embeddings: BTreeMap::new(),
        }
    }

    pub fn accumulate(&mut self, other: &Gradients<T>) {
        for ((_, a), (_, b)) in self.encoder.tensors_mut().into_iter().zip(other.encoder.tensors()) {
            a.add_assign(b);
        }
        for (&row, g) in &other.embeddings {
            let dst = self.embeddings.entry(row).or_insert_with(|| vec![T::zero(); g.len()]);
            for (a, &b) in dst.iter_mut().zip(g) {
                *a += b;
            }
        }
    }

    pub fn scale(&mut self, s: T) {
        for (_, t) in self.encoder.tensors_mut() {
            t.scale(s);
        }
        for g in self.embeddings.values_mut() {
            g.iter_mut().for_each(|v| *v *= s);
        }
    }

    pub fn global_norm(&self) -> T {
        let enc: T = self.encoder.tensors().iter().map(|(_, t)| t.sum_squares()).sum();
        let emb: T = self.embeddings.values().flatten().map(|&v| v * v).sum();
        (enc + emb).sqrt()
    }

    /// Name of the first tensor holding a non-finite value.
    pub fn first_non_finite(&self) -> Option<String> {
        if let Some((name, _)) = self.encoder.tensors().into_iter().find(|(_, t)| !t.is_finite()) {
            return Some(name);
        }
        self.embeddings
            .iter()
            .find(|(_, g)| g.iter().any(|v| !v.is_finite()))
            .map(|(row, _)| format!("embeddings[{row}]"))
    }
}

/// A complete model: configuration, trainable input embeddings, encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters<T> {
    pub config: ModelConfig,
    vocab: Vec<String>,
    vocab_index: HashMap<String, usize>,
    /// `|vocab| x d`
    pub embeddings: Tensor<T>,
    pub encoder: Encoder<T>,
}

impl<T: Scalar> ModelParameters<T> {
    pub fn new(config: ModelConfig, vocab: Vec<String>, embeddings: Tensor<T>, encoder: Encoder<T>) -> Result<Self, ModelError> {
        if embeddings.shape() != [vocab.len(), config.dim] {
            return Err(ModelError::Shape(format!(
                "embedding matrix {:?} for {} tokens of dimension {}",
                embeddings.shape(),
                vocab.len(),
                config.dim
            )));
        }
        if encoder.architecture() != config.architecture || encoder.dim() != config.dim {
            return Err(ModelError::Shape("encoder does not match the model configuration".into()));
        }
        let vocab_index: HashMap<String, usize> = vocab.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        if vocab_index.len() != vocab.len() {
            return Err(ModelError::Shape("input vocabulary has repeated tokens".into()));
        }
        Ok(Self {
            config,
            vocab,
            vocab_index,
            embeddings,
            encoder,
        })
    }

    /// Fresh model: input vectors copied from `pretrained` where available,
    /// Glorot-uniform rows otherwise; encoder from [`Encoder::glorot`].
    pub fn init(config: ModelConfig, vocab: Vec<String>, pretrained: &EmbeddingTable<T>, seed: u64) -> Result<Self, ModelError> {
        let d = config.dim;
        if pretrained.dim() != d && !pretrained.is_empty() {
            return Err(ModelError::Shape(format!("pretrained vectors have dimension {}, model {d}", pretrained.dim())));
        }
        let mut rng = rng::derived(seed, 1);
        let mut data = Vec::with_capacity(vocab.len() * d);
        for w in &vocab {
            match pretrained.lookup(w) {
                Some(v) => data.extend_from_slice(v),
                None => data.extend_from_slice(glorot_uniform::<T>(&[1, d], &mut rng).expect("d >= 1").data()),
            }
        }
        let embeddings = Tensor::from_vec(&[vocab.len(), d], data);
        let encoder = Encoder::glorot(config.architecture, d, config.score_reduction, seed);
        Self::new(config, vocab, embeddings, encoder)
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn token_id(&self, token: &str) -> Option<usize> {
        self.vocab_index.get(token).copied()
    }

    /// Ids of the known tokens; unknown tokens are skipped.
    pub fn token_ids<'a>(&self, tokens: impl IntoIterator<Item = &'a str>) -> Vec<usize> {
        tokens.into_iter().filter_map(|t| self.token_id(t)).collect()
    }

    pub fn input_vectors(&self, ids: &[usize]) -> Result<Vec<Vec<T>>, ModelError> {
        ids.iter()
            .map(|&i| {
                if i < self.vocab.len() {
                    Ok(self.embeddings.row(i).to_vec())
                } else {
                    Err(ModelError::TokenId(i))
                }
            })
            .collect()
    }

    pub fn forward(&self, ids: &[usize]) -> Result<ForwardTrace<T>, ModelError> {
        self.encoder.forward(&self.input_vectors(ids)?)
    }

    pub fn encode(&self, ids: &[usize]) -> Result<Vec<T>, ModelError> {
        Ok(self.forward(ids)?.output)
    }

    /// Gradients for one example whose forward pass used `ids`.
    pub fn backward(&self, ids: &[usize], trace: &ForwardTrace<T>, upstream: &[T]) -> Result<Gradients<T>, ModelError> {
        if trace.inputs.len() != ids.len() {
            return Err(ModelError::Shape("trace length differs from the token ids".into()));
        }
        let (encoder, d_inputs) = self.encoder.backward(trace, upstream)?;
        let mut embeddings: BTreeMap<usize, Vec<T>> = BTreeMap::new();
        for (&id, g) in ids.iter().zip(d_inputs) {
            match embeddings.get_mut(&id) {
                Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, &b)| *a += b),
                None => {
                    embeddings.insert(id, g);
                }
            }
        }
        Ok(Gradients { encoder, embeddings })
    }

    /// All tensors including `embeddings`, in checkpoint order.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor<T>)> {
        let mut out = vec![("embeddings".to_owned(), &self.embeddings)];
        out.extend(self.encoder.tensors());
        out
    }

    pub fn convert<U: Scalar>(&self) -> ModelParameters<U> {
        ModelParameters {
            config: self.config.clone(),
            vocab: self.vocab.clone(),
            vocab_index: self.vocab_index.clone(),
            embeddings: self.embeddings.convert(),
            encoder: self.encoder.convert(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.named_tensors().iter().all(|(_, t)| t.is_finite())
    }
}
