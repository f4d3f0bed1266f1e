//! Model files: a magic line, one JSON metadata line, then one JSON array
//! per parameter tensor in declaration order.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{CnnModel, ConvBank, ModelConfig};
use crate::embeddings::{EmbeddingChannel, Vocabulary};
use crate::error::{Error, Result};
use crate::real::Real;

pub const MODEL_MAGIC: &str = "SDPREL-MODEL v1";

#[derive(Serialize, Deserialize)]
struct TensorInfo {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct Metadata {
    config: ModelConfig,
    labels: Vec<String>,
    vocab: Vec<String>,
    tensors: Vec<TensorInfo>,
}

fn tensor_layout<F: Real>(model: &CnnModel<F>) -> Vec<TensorInfo> {
    model
        .param_ids()
        .into_iter()
        .map(|id| TensorInfo {
            name: model.param_name(id),
            shape: model.param_shape(id),
        })
        .collect()
}

pub fn save_model<F: Real, W: Write>(model: &CnnModel<F>, mut out: W) -> Result<()> {
    writeln!(out, "{MODEL_MAGIC}")?;
    let meta = Metadata {
        config: model.config.clone(),
        labels: model.labels.clone(),
        vocab: model.vocab.tokens().to_vec(),
        tensors: tensor_layout(model),
    };
    writeln!(out, "{}", serde_json::to_string(&meta)?)?;
    let mut line = String::new();
    for id in model.param_ids() {
        line.clear();
        line.push('[');
        for (i, x) in model.param(id).iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            // Nine significant digits.
            line.push_str(&format!("{:.8e}", x.as_f64()));
        }
        line.push_str("]\n");
        out.write_all(line.as_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn load_model<F: Real, R: BufRead>(reader: R) -> Result<CnnModel<F>> {
    let mut lines = reader.lines();
    let magic = lines.next().transpose()?.unwrap_or_default();
    if magic.trim_end() != MODEL_MAGIC {
        return Err(Error::Version {
            expected: MODEL_MAGIC.into(),
            found: magic,
        });
    }
    let meta_line = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::Shape("missing metadata line".into()))?;
    let meta: Metadata = serde_json::from_str(&meta_line)
        .map_err(|e| Error::Shape(format!("unreadable metadata: {e}")))?;
    meta.config.validate()?;
    let vocab = Vocabulary::from_tokens(meta.vocab)?;
    let cfg = meta.config;
    if meta.labels.len() != cfg.num_classes {
        return Err(Error::Shape(format!(
            "{} labels for {} classes",
            meta.labels.len(),
            cfg.num_classes
        )));
    }

    // Skeleton with the declared shapes; values are filled from the file.
    let d = cfg.embedding_dim;
    let f = cfg.filters_per_width;
    let mut model = CnnModel {
        channels: cfg
            .channels
            .iter()
            .map(|spec| EmbeddingChannel {
                dim: d,
                matrix: vec![F::zero(); vocab.len() * d],
                trainable: spec.trainable,
                source: spec.source.clone(),
            })
            .collect(),
        conv: cfg
            .filter_widths
            .iter()
            .map(|&w| ConvBank {
                width: w,
                weights: vec![F::zero(); f * w * d],
                bias: vec![F::zero(); f],
            })
            .collect(),
        fc_weights: vec![F::zero(); cfg.num_classes * cfg.hidden_size()],
        fc_bias: vec![F::zero(); cfg.num_classes],
        labels: meta.labels,
        vocab,
        config: cfg,
    };

    let expected = tensor_layout(&model);
    if expected.len() != meta.tensors.len()
        || expected
            .iter()
            .zip(&meta.tensors)
            .any(|(a, b)| a.name != b.name || a.shape != b.shape)
    {
        return Err(Error::Shape("tensor list disagrees with model configuration".into()));
    }

    for (id, info) in model.param_ids().into_iter().zip(&expected) {
        let line = lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::Shape(format!("file truncated: tensor `{}` missing", info.name)))?;
        let values: Vec<f64> = serde_json::from_str(&line)
            .map_err(|e| Error::Shape(format!("tensor `{}` unreadable: {e}", info.name)))?;
        let target = model.param_mut(id);
        if values.len() != target.len() {
            return Err(Error::Shape(format!(
                "tensor `{}` has {} values, expected {}",
                info.name,
                values.len(),
                target.len()
            )));
        }
        for (t, v) in target.iter_mut().zip(values) {
            *t = F::of(v);
        }
    }
    for rest in lines {
        if !rest?.trim().is_empty() {
            return Err(Error::Shape("unexpected data after last tensor".into()));
        }
    }
    Ok(model)
}
