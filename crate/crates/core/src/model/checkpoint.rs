//! Versioned binary checkpoint.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic      8 bytes  "REVDICT\0"
//! version    u32
//! meta_len   u64
//! meta       meta_len bytes of UTF-8 JSON (CheckpointMeta)
//! count      u32
//! count times:
//!   name_len u32, name (UTF-8)
//!   rank     u32, dims (rank x u64)
//!   values   product(dims) x f32, row-major
//! ```
//!
//! Values are stored as `f32`, so a single-precision model round-trips bit
//! for bit.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Encoder, ModelConfig, ModelError, ModelParameters, Tensor};
use crate::scalar::Scalar;

const MAGIC: &[u8; 8] = b"REVDICT\0";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub config: ModelConfig,
    pub input_vocab: Vec<String>,
    /// Fingerprint of the frozen output-word table the model was trained
    /// against, used to refuse evaluation against different data.
    #[serde(default)]
    pub output_fingerprint: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: ModelParameters<f32>,
    pub output_fingerprint: Option<u64>,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let mut w = BufWriter::new(File::create(path)?);
        write_checkpoint(&mut w, &self.model, self.output_fingerprint)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        read_checkpoint(BufReader::new(File::open(path)?))
    }
}

pub fn write_checkpoint<T: Scalar, W: Write>(
    mut w: W,
    model: &ModelParameters<T>,
    output_fingerprint: Option<u64>,
) -> Result<(), ModelError> {
    let meta = CheckpointMeta {
        config: model.config.clone(),
        input_vocab: model.vocab().to_vec(),
        output_fingerprint,
    };
    let meta = serde_json::to_vec(&meta).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
    w.write_all(MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(meta.len() as u64).to_le_bytes())?;
    w.write_all(&meta)?;
    let tensors = model.named_tensors();
    w.write_all(&(tensors.len() as u32).to_le_bytes())?;
    for (name, t) in tensors {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&(t.shape().len() as u32).to_le_bytes())?;
        for &d in t.shape() {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for v in t.data() {
            w.write_all(&(v.as_f64() as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N], ModelError> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| ModelError::Checkpoint(format!("truncated file: {e}")))?;
    Ok(buf)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, ModelError> {
    Ok(u32::from_le_bytes(read_array(r)?))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, ModelError> {
    Ok(u64::from_le_bytes(read_array(r)?))
}

fn read_bytes<R: Read>(r: &mut R, len: u64) -> Result<Vec<u8>, ModelError> {
    let mut buf = Vec::new();
    r.take(len).read_to_end(&mut buf)?;
    if buf.len() as u64 != len {
        return Err(ModelError::Checkpoint("truncated file".into()));
    }
    Ok(buf)
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Checkpoint, ModelError> {
    let bad = |m: String| ModelError::Checkpoint(m);
    if &read_array::<8, _>(&mut r)? != MAGIC {
        return Err(bad("not a checkpoint file".into()));
    }
    let version = read_u32(&mut r)?;
    if version != CHECKPOINT_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let meta_len = read_u64(&mut r)?;
    let meta: CheckpointMeta =
        serde_json::from_slice(&read_bytes(&mut r, meta_len)?).map_err(|e| bad(format!("metadata: {e}")))?;
    let config = meta.config;
    let d = config.dim;

    let mut encoder = Encoder::<f32>::zeros(config.architecture, d, config.score_reduction);
    let mut embeddings = None;
    let mut seen = Vec::new();
    let count = read_u32(&mut r)?;
    for _ in 0..count {
        let name_len = read_u32(&mut r)?;
        let name = String::from_utf8(read_bytes(&mut r, name_len as u64)?).map_err(|_| bad("tensor name is not UTF-8".into()))?;
        let rank = read_u32(&mut r)?;
        let shape = (0..rank)
            .map(|_| read_u64(&mut r).map(|v| v as usize))
            .collect::<Result<Vec<_>, _>>()?;
        let len: usize = shape.iter().product();
        let raw = read_bytes(&mut r, 4 * len as u64)?;
        let data: Vec<f32> = raw.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
        if seen.contains(&name) {
            return Err(bad(format!("tensor {name} appears twice")));
        }
        if name == "embeddings" {
            embeddings = Some(Tensor::from_vec(&shape, data));
        } else {
            let mut slots = encoder.tensors_mut();
            let (_, slot) = slots
                .iter_mut()
                .find(|(n, _)| *n == name)
                .ok_or_else(|| bad(format!("unexpected tensor {name} for a {} model", config.architecture)))?;
            if slot.shape() != shape.as_slice() {
                return Err(bad(format!("tensor {name} has shape {shape:?}, expected {:?}", slot.shape())));
            }
            **slot = Tensor::from_vec(&shape, data);
        }
        seen.push(name);
    }
    let expected = encoder.tensors().len() + 1;
    if seen.len() != expected {
        return Err(bad(format!("found {} tensors, expected {expected}", seen.len())));
    }
    let embeddings = embeddings.ok_or_else(|| bad("missing embeddings tensor".into()))?;
    let model = ModelParameters::new(config, meta.input_vocab, embeddings, encoder)?;
    Ok(Checkpoint {
        model,
        output_fingerprint: meta.output_fingerprint,
    })
}
