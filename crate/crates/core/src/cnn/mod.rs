//! Sentence CNN over embedded dependency paths.
//!
//! Layers: one or two embedding channels, convolutions of several widths
//! with ReLU (channel responses summed before the activation), max-over-time
//! pooling, dropout, and a fully connected softmax layer.

mod adam;
mod gradcheck;
mod io;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embeddings::{EmbeddingChannel, EmbeddingSource, Vocabulary, PAD_INDEX};
use crate::error::{Error, Result};
use crate::real::{axpy, dot, Real};

pub use adam::{adam_step, AdamConfig, TrainState};
pub use gradcheck::{
    central_difference, gradient_check, tiny_model, GradCheckOptions, GradCheckReport, ParamError,
};
pub use io::{load_model, save_model, MODEL_MAGIC};

/// Probability floor applied before taking the log in the loss.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub source: EmbeddingSource,
    pub trainable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub filter_widths: Vec<usize>,
    pub filters_per_width: usize,
    pub dropout: f64,
    /// Cap on the L2 norm of each fully connected row.
    pub norm_cap: f64,
    pub embedding_dim: usize,
    pub max_len: usize,
    pub num_classes: usize,
    pub channels: Vec<ChannelSpec>,
}

impl ModelConfig {
    /// Defaults: widths 3/4/5, 128 filters each, dropout 0.5, norm cap 3.
    pub fn new(
        embedding_dim: usize,
        max_len: usize,
        num_classes: usize,
        channels: Vec<ChannelSpec>,
    ) -> Self {
        ModelConfig {
            filter_widths: vec![3, 4, 5],
            filters_per_width: 128,
            dropout: 0.5,
            norm_cap: 3.0,
            embedding_dim,
            max_len,
            num_classes,
            channels,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.filter_widths.is_empty() || self.filter_widths.contains(&0) {
            return fail("filter widths must be non-empty and positive".into());
        }
        if let Some(w) = self.filter_widths.iter().find(|&&w| w > self.max_len) {
            return fail(format!("filter width {w} exceeds sequence length {}", self.max_len));
        }
        if self.filters_per_width == 0 || self.embedding_dim == 0 {
            return fail("filter count and embedding dimension must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if self.norm_cap.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return fail(format!("norm cap {} must be positive", self.norm_cap));
        }
        if self.num_classes < 2 {
            return fail(format!("need at least 2 classes, got {}", self.num_classes));
        }
        if !(1..=2).contains(&self.channels.len()) {
            return fail(format!("need 1 or 2 channels, got {}", self.channels.len()));
        }
        Ok(())
    }

    /// Length of the pooled feature vector.
    pub fn hidden_size(&self) -> usize {
        self.filter_widths.len() * self.filters_per_width
    }

    /// Closed-form parameter count for a vocabulary of `vocab_size` tokens.
    pub fn parameter_count(&self, vocab_size: usize) -> usize {
        let d = self.embedding_dim;
        let f = self.filters_per_width;
        self.channels.len() * vocab_size * d
            + self.filter_widths.iter().map(|w| f * w * d + f).sum::<usize>()
            + self.num_classes * self.hidden_size()
            + self.num_classes
    }
}

/// Filters of one width: `weights` is `filters × width × dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvBank<F> {
    pub width: usize,
    pub weights: Vec<F>,
    pub bias: Vec<F>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParamId {
    Embedding(usize),
    ConvWeight(usize),
    ConvBias(usize),
    FcWeight,
    FcBias,
}

#[derive(Clone, Debug)]
pub struct CnnModel<F> {
    pub config: ModelConfig,
    pub vocab: Vocabulary,
    pub labels: Vec<String>,
    pub channels: Vec<EmbeddingChannel<F>>,
    pub conv: Vec<ConvBank<F>>,
    /// `num_classes × hidden_size`, row-major.
    pub fc_weights: Vec<F>,
    pub fc_bias: Vec<F>,
}

/// Activations kept by [`CnnModel::forward`] for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache<F> {
    pub indices: Vec<usize>,
    /// Channel embeddings summed per position, `max_len × dim`.
    pub summed: Vec<F>,
    /// Max-pooled ReLU features before dropout.
    pub pooled: Vec<F>,
    /// Position of the (first) maximum of every feature map.
    pub argmax: Vec<usize>,
    pub mask: Option<Vec<F>>,
    /// Features after dropout, fed to the output layer.
    pub hidden: Vec<F>,
    /// Smallest distance of any pooled pre-activation from a kink (zero or
    /// the runner-up position).
    pub kink_margin: F,
}

#[derive(Clone, Debug)]
pub struct ForwardOutput<F> {
    pub logits: Vec<F>,
    pub probabilities: Vec<F>,
    pub cache: ForwardCache<F>,
}

/// Per-parameter gradients. Embedding gradients are sparse rows and exist
/// only for trainable channels.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<F> {
    pub embeddings: Vec<BTreeMap<usize, Vec<F>>>,
    pub conv_weights: Vec<Vec<F>>,
    pub conv_bias: Vec<Vec<F>>,
    pub fc_weights: Vec<F>,
    pub fc_bias: Vec<F>,
}

impl<F: Real> Gradients<F> {
    pub fn zeros_like(model: &CnnModel<F>) -> Self {
        Gradients {
            embeddings: vec![BTreeMap::new(); model.channels.len()],
            conv_weights: model.conv.iter().map(|b| vec![F::zero(); b.weights.len()]).collect(),
            conv_bias: model.conv.iter().map(|b| vec![F::zero(); b.bias.len()]).collect(),
            fc_weights: vec![F::zero(); model.fc_weights.len()],
            fc_bias: vec![F::zero(); model.fc_bias.len()],
        }
    }

    pub fn add(&mut self, other: &Gradients<F>) {
        for (mine, theirs) in self.embeddings.iter_mut().zip(&other.embeddings) {
            for (row, values) in theirs {
                match mine.get_mut(row) {
                    Some(acc) => axpy(F::one(), values, acc),
                    None => {
                        mine.insert(*row, values.clone());
                    }
                }
            }
        }
        let dense = self
            .conv_weights
            .iter_mut()
            .zip(&other.conv_weights)
            .chain(self.conv_bias.iter_mut().zip(&other.conv_bias))
            .chain(std::iter::once((&mut self.fc_weights, &other.fc_weights)))
            .chain(std::iter::once((&mut self.fc_bias, &other.fc_bias)));
        for (mine, theirs) in dense {
            axpy(F::one(), theirs, mine);
        }
    }

    /// Gradient of one scalar parameter; zero for untouched embedding rows.
    pub fn get(&self, id: ParamId, index: usize, dim: usize) -> F {
        match id {
            ParamId::Embedding(c) => self.embeddings[c]
                .get(&(index / dim))
                .map(|row| row[index % dim])
                .unwrap_or_else(F::zero),
            ParamId::ConvWeight(b) => self.conv_weights[b][index],
            ParamId::ConvBias(b) => self.conv_bias[b][index],
            ParamId::FcWeight => self.fc_weights[index],
            ParamId::FcBias => self.fc_bias[index],
        }
    }

    /// Name of the first tensor holding a NaN or infinity.
    pub fn first_non_finite(&self) -> Option<String> {
        for (c, rows) in self.embeddings.iter().enumerate() {
            if rows.values().flatten().any(|x| !x.is_finite()) {
                return Some(format!("embedding.{c}"));
            }
        }
        let dense = self
            .conv_weights
            .iter()
            .enumerate()
            .map(|(b, t)| (format!("conv.{b}.weight"), t))
            .chain(self.conv_bias.iter().enumerate().map(|(b, t)| (format!("conv.{b}.bias"), t)))
            .chain([("fc.weight".to_owned(), &self.fc_weights), ("fc.bias".to_owned(), &self.fc_bias)]);
        for (name, tensor) in dense {
            if tensor.iter().any(|x| !x.is_finite()) {
                return Some(name);
            }
        }
        None
    }
}

/// Numerically stable softmax (maximum subtracted first).
pub fn softmax<F: Real>(logits: &[F]) -> Vec<F> {
    let max = logits.iter().copied().fold(F::neg_infinity(), F::max);
    let exps: Vec<F> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: F = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// `weight · −ln p_gold`, with `p_gold` floored at 1e-12. The flag reports
/// whether the floor was hit.
pub fn weighted_cross_entropy<F: Real>(
    probabilities: &[F],
    gold: usize,
    class_weights: &[F],
) -> (F, bool) {
    let p = probabilities[gold];
    let floor = F::of(PROB_FLOOR);
    let clamped = p < floor;
    if clamped {
        log::warn!("probability of gold class {gold} underflowed; clamped to {PROB_FLOOR}");
    }
    (class_weights[gold] * -(p.max(floor)).ln(), clamped)
}

/// Rescale every row of a `rows × cols` matrix whose L2 norm exceeds `cap`.
pub fn apply_max_norm<F: Real>(weights: &mut [F], cols: usize, cap: f64) {
    for row in weights.chunks_mut(cols) {
        let norm = row.iter().map(|x| x.as_f64().powi(2)).sum::<f64>().sqrt();
        if norm > cap {
            let scale = cap / norm;
            row.iter_mut().for_each(|x| *x = F::of(x.as_f64() * scale));
        }
    }
}

/// Draw an inverted-dropout mask: each entry is 0 with probability `rate`
/// and `1 / (1 - rate)` otherwise.
pub fn sample_dropout_mask<F: Real, R: Rng>(rng: &mut R, len: usize, rate: f64) -> Vec<F> {
    let keep = F::of(1.0 / (1.0 - rate));
    (0..len)
        .map(|_| if rng.gen::<f64>() < rate { F::zero() } else { keep })
        .collect()
}

/// One training or evaluation example: padded indices and gold class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Example {
    pub indices: Vec<usize>,
    pub gold: usize,
}

const BATCH_CHUNKS: usize = 8;

impl<F: Real> CnnModel<F> {
    /// Fresh model: the given embedding channels, Glorot-uniform convolution
    /// and output weights, zero biases.
    pub fn new(
        config: ModelConfig,
        vocab: Vocabulary,
        labels: Vec<String>,
        channels: Vec<EmbeddingChannel<F>>,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        if labels.len() != config.num_classes {
            return Err(Error::Config(format!(
                "{} labels for {} classes",
                labels.len(),
                config.num_classes
            )));
        }
        if channels.len() != config.channels.len() {
            return Err(Error::Config("channel count differs from config".into()));
        }
        for ch in &channels {
            if ch.dim != config.embedding_dim || ch.matrix.len() != vocab.len() * ch.dim {
                return Err(Error::Shape(format!(
                    "embedding channel is {}×{}, expected {}×{}",
                    ch.rows(),
                    ch.dim,
                    vocab.len(),
                    config.embedding_dim
                )));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = config.embedding_dim;
        let f = config.filters_per_width;
        let mut uniform = |n: usize, fan_in: usize, fan_out: usize| -> Vec<F> {
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            (0..n).map(|_| F::of(rng.gen_range(-a..a))).collect()
        };
        let conv = config
            .filter_widths
            .iter()
            .map(|&w| ConvBank {
                width: w,
                weights: uniform(f * w * d, w * d, f),
                bias: vec![F::zero(); f],
            })
            .collect();
        let h = config.hidden_size();
        let k = config.num_classes;
        let fc_weights = uniform(k * h, h, k);
        let mut model = CnnModel {
            config,
            vocab,
            labels,
            channels,
            conv,
            fc_weights,
            fc_bias: vec![F::zero(); k],
        };
        apply_max_norm(&mut model.fc_weights, h, model.config.norm_cap);
        model.zero_pad_rows();
        Ok(model)
    }

    pub fn cast<G: Real>(&self) -> CnnModel<G> {
        let cast = |v: &Vec<F>| v.iter().map(|&x| G::of(x.as_f64())).collect::<Vec<G>>();
        CnnModel {
            config: self.config.clone(),
            vocab: self.vocab.clone(),
            labels: self.labels.clone(),
            channels: self.channels.iter().map(EmbeddingChannel::cast).collect(),
            conv: self
                .conv
                .iter()
                .map(|b| ConvBank {
                    width: b.width,
                    weights: cast(&b.weights),
                    bias: cast(&b.bias),
                })
                .collect(),
            fc_weights: cast(&self.fc_weights),
            fc_bias: cast(&self.fc_bias),
        }
    }

    pub fn zero_pad_rows(&mut self) {
        for ch in &mut self.channels {
            let d = ch.dim;
            ch.matrix[PAD_INDEX * d..(PAD_INDEX + 1) * d]
                .iter_mut()
                .for_each(|x| *x = F::zero());
        }
    }

    /// Parameter tensors in declaration order.
    pub fn param_ids(&self) -> Vec<ParamId> {
        let mut ids: Vec<ParamId> = (0..self.channels.len()).map(ParamId::Embedding).collect();
        for b in 0..self.conv.len() {
            ids.push(ParamId::ConvWeight(b));
            ids.push(ParamId::ConvBias(b));
        }
        ids.push(ParamId::FcWeight);
        ids.push(ParamId::FcBias);
        ids
    }

    pub fn param_name(&self, id: ParamId) -> String {
        match id {
            ParamId::Embedding(c) => format!("embedding.{c}"),
            ParamId::ConvWeight(b) => format!("conv{}.weight", self.conv[b].width),
            ParamId::ConvBias(b) => format!("conv{}.bias", self.conv[b].width),
            ParamId::FcWeight => "fc.weight".into(),
            ParamId::FcBias => "fc.bias".into(),
        }
    }

    pub fn param_shape(&self, id: ParamId) -> Vec<usize> {
        let d = self.config.embedding_dim;
        let f = self.config.filters_per_width;
        match id {
            ParamId::Embedding(_) => vec![self.vocab.len(), d],
            ParamId::ConvWeight(b) => vec![f, self.conv[b].width, d],
            ParamId::ConvBias(_) => vec![f],
            ParamId::FcWeight => vec![self.config.num_classes, self.config.hidden_size()],
            ParamId::FcBias => vec![self.config.num_classes],
        }
    }

    pub fn param(&self, id: ParamId) -> &[F] {
        match id {
            ParamId::Embedding(c) => &self.channels[c].matrix,
            ParamId::ConvWeight(b) => &self.conv[b].weights,
            ParamId::ConvBias(b) => &self.conv[b].bias,
            ParamId::FcWeight => &self.fc_weights,
            ParamId::FcBias => &self.fc_bias,
        }
    }

    pub fn param_mut(&mut self, id: ParamId) -> &mut [F] {
        match id {
            ParamId::Embedding(c) => &mut self.channels[c].matrix,
            ParamId::ConvWeight(b) => &mut self.conv[b].weights,
            ParamId::ConvBias(b) => &mut self.conv[b].bias,
            ParamId::FcWeight => &mut self.fc_weights,
            ParamId::FcBias => &mut self.fc_bias,
        }
    }

    pub fn is_trainable(&self, id: ParamId) -> bool {
        match id {
            ParamId::Embedding(c) => self.channels[c].trainable,
            _ => true,
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.param_ids().iter().map(|&id| self.param(id).len()).sum()
    }

    /// Forward pass over one padded index sequence. A dropout mask switches
    /// on training behaviour.
    pub fn forward(&self, indices: &[usize], dropout_mask: Option<Vec<F>>) -> Result<ForwardOutput<F>> {
        let cfg = &self.config;
        let (len, d) = (cfg.max_len, cfg.embedding_dim);
        if indices.len() != len {
            return Err(Error::Shape(format!(
                "sequence length {} differs from model length {len}",
                indices.len()
            )));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.vocab.len()) {
            return Err(Error::Shape(format!("token index {bad} outside vocabulary")));
        }
        let h = cfg.hidden_size();
        if let Some(mask) = &dropout_mask {
            if mask.len() != h {
                return Err(Error::Shape(format!("dropout mask of {} for {h} features", mask.len())));
            }
        }

        let mut summed = vec![F::zero(); len * d];
        for ch in &self.channels {
            for (t, &idx) in indices.iter().enumerate() {
                axpy(F::one(), ch.row(idx), &mut summed[t * d..(t + 1) * d]);
            }
        }

        let fpw = cfg.filters_per_width;
        let mut pooled = vec![F::zero(); h];
        let mut argmax = vec![0usize; h];
        let mut kink_margin = F::infinity();
        for (b, bank) in self.conv.iter().enumerate() {
            let span = bank.width * d;
            for f in 0..fpw {
                let filter = &bank.weights[f * span..(f + 1) * span];
                let mut best = F::neg_infinity();
                let mut runner_up = F::neg_infinity();
                let mut best_t = 0;
                for t in 0..=len - bank.width {
                    let pre = bank.bias[f] + dot(filter, &summed[t * d..t * d + span]);
                    if pre > best {
                        runner_up = best;
                        best = pre;
                        best_t = t;
                    } else if pre > runner_up {
                        runner_up = pre;
                    }
                }
                let slot = b * fpw + f;
                kink_margin = kink_margin.min(best.abs());
                if best > F::zero() {
                    pooled[slot] = best;
                    argmax[slot] = best_t;
                    kink_margin = kink_margin.min(best - runner_up);
                }
            }
        }

        let hidden: Vec<F> = match &dropout_mask {
            Some(mask) => pooled.iter().zip(mask).map(|(&x, &m)| x * m).collect(),
            None => pooled.clone(),
        };
        let logits: Vec<F> = (0..cfg.num_classes)
            .map(|k| self.fc_bias[k] + dot(&self.fc_weights[k * h..(k + 1) * h], &hidden))
            .collect();
        let probabilities = softmax(&logits);
        Ok(ForwardOutput {
            logits,
            probabilities,
            cache: ForwardCache {
                indices: indices.to_vec(),
                summed,
                pooled,
                argmax,
                mask: dropout_mask,
                hidden,
                kink_margin,
            },
        })
    }

    /// Accumulate the gradients of a loss whose derivative with respect to
    /// the logits is `dlogits`.
    pub fn backward_into(
        &self,
        cache: &ForwardCache<F>,
        dlogits: &[F],
        grads: &mut Gradients<F>,
    ) -> Result<()> {
        let cfg = &self.config;
        let (d, h, fpw) = (cfg.embedding_dim, cfg.hidden_size(), cfg.filters_per_width);
        if dlogits.len() != cfg.num_classes
            || cache.pooled.len() != h
            || cache.indices.len() != cfg.max_len
            || cache.summed.len() != cfg.max_len * d
        {
            return Err(Error::Shape("forward cache does not match model".into()));
        }

        let mut dhidden = vec![F::zero(); h];
        for (k, &g) in dlogits.iter().enumerate() {
            grads.fc_bias[k] += g;
            axpy(g, &cache.hidden, &mut grads.fc_weights[k * h..(k + 1) * h]);
            axpy(g, &self.fc_weights[k * h..(k + 1) * h], &mut dhidden);
        }
        if let Some(mask) = &cache.mask {
            dhidden.iter_mut().zip(mask).for_each(|(g, &m)| *g *= m);
        }

        for (b, bank) in self.conv.iter().enumerate() {
            let span = bank.width * d;
            for f in 0..fpw {
                let slot = b * fpw + f;
                if cache.pooled[slot] <= F::zero() || dhidden[slot] == F::zero() {
                    continue;
                }
                let g = dhidden[slot];
                let t = cache.argmax[slot];
                grads.conv_bias[b][f] += g;
                axpy(
                    g,
                    &cache.summed[t * d..t * d + span],
                    &mut grads.conv_weights[b][f * span..(f + 1) * span],
                );
                let filter = &bank.weights[f * span..(f + 1) * span];
                for (c, ch) in self.channels.iter().enumerate() {
                    if !ch.trainable {
                        continue;
                    }
                    for j in 0..bank.width {
                        let row = cache.indices[t + j];
                        if row == PAD_INDEX {
                            continue;
                        }
                        let acc = grads.embeddings[c]
                            .entry(row)
                            .or_insert_with(|| vec![F::zero(); d]);
                        axpy(g, &filter[j * d..(j + 1) * d], acc);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn backward(&self, cache: &ForwardCache<F>, dlogits: &[F]) -> Result<Gradients<F>> {
        let mut grads = Gradients::zeros_like(self);
        self.backward_into(cache, dlogits, &mut grads)?;
        Ok(grads)
    }

    /// Mean weighted cross-entropy of `batch` and its gradients.
    ///
    /// `masks` (one per example) enables dropout. The batch is split into a
    /// fixed number of contiguous chunks that are processed in parallel and
    /// summed in order, so results do not depend on the thread count.
    pub fn batch_gradients(
        &self,
        batch: &[Example],
        class_weights: &[F],
        masks: Option<Vec<Vec<F>>>,
    ) -> Result<(F, Gradients<F>)> {
        if batch.is_empty() {
            return Err(Error::Data("empty batch".into()));
        }
        let scale = F::one() / F::of(batch.len() as f64);
        let masks: Vec<Option<Vec<F>>> = match masks {
            Some(m) => m.into_iter().map(Some).collect(),
            None => vec![None; batch.len()],
        };
        if masks.len() != batch.len() {
            return Err(Error::Shape("one dropout mask per example required".into()));
        }
        let chunk = batch.len().div_ceil(BATCH_CHUNKS);
        let mut masks = masks.into_iter();
        let jobs: Vec<_> = batch
            .chunks(chunk)
            .map(|part| (part, masks.by_ref().take(part.len()).collect::<Vec<_>>()))
            .collect();

        let partials: Vec<Result<(F, Gradients<F>)>> = jobs
            .into_par_iter()
            .map(|(examples, masks)| {
                let mut grads = Gradients::zeros_like(self);
                let mut loss = F::zero();
                for (example, mask) in examples.iter().zip(masks) {
                    let out = self.forward(&example.indices, mask)?;
                    let (l, _) = weighted_cross_entropy(&out.probabilities, example.gold, class_weights);
                    loss += l * scale;
                    let w = class_weights[example.gold] * scale;
                    let dlogits: Vec<F> = out
                        .probabilities
                        .iter()
                        .enumerate()
                        .map(|(k, &p)| w * (if k == example.gold { p - F::one() } else { p }))
                        .collect();
                    self.backward_into(&out.cache, &dlogits, &mut grads)?;
                }
                Ok((loss, grads))
            })
            .collect();

        let mut total = F::zero();
        let mut grads = Gradients::zeros_like(self);
        for partial in partials {
            let (l, g) = partial?;
            total += l;
            grads.add(&g);
        }
        Ok((total, grads))
    }

    /// Mean weighted loss without gradients (evaluation mode).
    pub fn batch_loss(&self, batch: &[Example], class_weights: &[F]) -> Result<F> {
        let mut total = F::zero();
        for example in batch {
            let out = self.forward(&example.indices, None)?;
            total += weighted_cross_entropy(&out.probabilities, example.gold, class_weights).0;
        }
        Ok(total / F::of(batch.len() as f64))
    }

    /// Evaluation-mode class probabilities for each sequence.
    pub fn predict_proba(&self, sequences: &[Vec<usize>]) -> Result<Vec<Vec<F>>> {
        sequences
            .par_iter()
            .map(|s| self.forward(s, None).map(|o| o.probabilities))
            .collect()
    }
}

/// Index of the largest value; the first one on ties.
pub fn argmax<F: PartialOrd + Copy>(values: &[F]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests;
