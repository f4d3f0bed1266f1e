//! Finite-difference verification of the analytic gradients.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ChannelSpec, CnnModel, Example, ModelConfig, ParamId};
use crate::embeddings::{EmbeddingChannel, EmbeddingSource, Vocabulary, PAD_INDEX};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckOptions {
    /// Number of parameter coordinates to check.
    pub samples: usize,
    pub epsilon: f64,
    pub tolerance: f64,
    /// Inputs whose pooled pre-activations lie this close to a kink are
    /// redrawn.
    pub kink_margin: f64,
    /// Entries kept in the worst-offender list.
    pub worst: usize,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            samples: 500,
            epsilon: 1e-5,
            tolerance: 1e-4,
            kink_margin: 1e-6,
            worst: 10,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamError {
    pub tensor: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub checked: usize,
    pub distinct: usize,
    pub worst_rel_err: f64,
    pub failures: Vec<ParamError>,
    pub worst: Vec<ParamError>,
    pub resampled_inputs: usize,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn into_result(self) -> Result<Self> {
        if self.passed() {
            Ok(self)
        } else {
            Err(Error::GradientCheck {
                checked: self.checked,
                failures: self.failures.len(),
                worst: self.worst_rel_err,
            })
        }
    }
}

/// `(f(x + eps) − f(x − eps)) / 2 eps`
pub fn central_difference<G: FnMut(f64) -> f64>(mut f: G, x: f64, eps: f64) -> f64 {
    (f(x + eps) - f(x - eps)) / (2.0 * eps)
}

/// Compare analytic gradients of the mean weighted loss over `batch` with
/// central differences on sampled trainable coordinates (dropout off).
///
/// Coordinates are drawn without replacement; when the model has fewer
/// trainable coordinates than `samples`, every coordinate is checked and the
/// remainder is drawn with replacement. `batch` is updated in place when an
/// input has to be redrawn away from a ReLU or max-pool kink.
pub fn gradient_check(
    model: &CnnModel<f64>,
    batch: &mut [Example],
    class_weights: &[f64],
    options: &GradCheckOptions,
) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let vocab_size = model.vocab.len();
    let mut resampled = 0;
    for example in batch.iter_mut() {
        let mut attempts = 0;
        while model.forward(&example.indices, None)?.cache.kink_margin < options.kink_margin {
            attempts += 1;
            if attempts > 100 {
                return Err(Error::Data("could not draw an input away from ReLU kinks".into()));
            }
            for idx in example.indices.iter_mut() {
                *idx = rng.gen_range(1..vocab_size);
            }
            resampled += 1;
        }
    }

    let (_, grads) = model.batch_gradients(batch, class_weights, None)?;

    let dim = model.config.embedding_dim;
    let mut coords: Vec<(ParamId, usize)> = Vec::new();
    for id in model.param_ids() {
        if !model.is_trainable(id) {
            continue;
        }
        let len = model.param(id).len();
        coords.extend(
            (0..len)
                .filter(|i| !matches!(id, ParamId::Embedding(_)) || i / dim != PAD_INDEX)
                .map(|i| (id, i)),
        );
    }
    if coords.is_empty() {
        return Err(Error::Config("model has no trainable parameters".into()));
    }
    let distinct = coords.len().min(options.samples);
    let mut chosen: Vec<(ParamId, usize)> = coords
        .choose_multiple(&mut rng, distinct)
        .copied()
        .collect();
    while chosen.len() < options.samples {
        chosen.push(*coords.choose(&mut rng).expect("non-empty"));
    }

    let mut probe = model.clone();
    let mut errors = Vec::with_capacity(chosen.len());
    for &(id, index) in &chosen {
        let analytic = grads.get(id, index, dim);
        let original = probe.param(id)[index];
        let mut loss_at = |x: f64| -> f64 {
            probe.param_mut(id)[index] = x;
            probe.batch_loss(batch, class_weights).unwrap_or(f64::NAN)
        };
        let numeric = central_difference(&mut loss_at, original, options.epsilon);
        probe.param_mut(id)[index] = original;
        let denom = analytic.abs().max(numeric.abs()).max(1e-8);
        let rel_err = (analytic - numeric).abs() / denom;
        errors.push(ParamError {
            tensor: model.param_name(id),
            index,
            analytic,
            numeric,
            rel_err: if rel_err.is_nan() { f64::INFINITY } else { rel_err },
        });
    }

    let failures: Vec<ParamError> = errors
        .iter()
        .filter(|e| e.rel_err > options.tolerance)
        .cloned()
        .collect();
    errors.sort_by(|a, b| b.rel_err.total_cmp(&a.rel_err));
    let worst_rel_err = errors.first().map(|e| e.rel_err).unwrap_or(0.0);
    errors.truncate(options.worst);
    Ok(GradCheckReport {
        checked: chosen.len(),
        distinct,
        worst_rel_err,
        failures,
        worst: errors,
        resampled_inputs: resampled,
    })
}

/// A small random model in 64-bit mode for gradient checks.
///
/// `channels` lists the trainable flag of each channel; all channels are
/// randomly initialized.
#[allow(clippy::too_many_arguments)]
pub fn tiny_model(
    vocab_size: usize,
    dim: usize,
    max_len: usize,
    num_classes: usize,
    widths: &[usize],
    filters: usize,
    channels: &[bool],
    seed: u64,
) -> Result<CnnModel<f64>> {
    if vocab_size < 3 {
        return Err(Error::Config("vocabulary needs at least 3 tokens".into()));
    }
    let words: Vec<String> = (0..vocab_size - 2).map(|i| format!("w{i}")).collect();
    let mut tokens = vec!["<pad>".to_owned(), "<unk>".to_owned()];
    tokens.extend(words);
    let vocab = Vocabulary::from_tokens(tokens)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs: Vec<ChannelSpec> = channels
        .iter()
        .map(|&trainable| ChannelSpec {
            source: EmbeddingSource::Random,
            trainable,
        })
        .collect();
    let embedding: Vec<EmbeddingChannel<f64>> = specs
        .iter()
        .map(|spec| {
            let mut matrix: Vec<f64> = (0..vocab_size * dim).map(|_| rng.gen_range(-0.5..0.5)).collect();
            matrix[..dim].iter_mut().for_each(|x| *x = 0.0);
            EmbeddingChannel {
                dim,
                matrix,
                trainable: spec.trainable,
                source: spec.source.clone(),
            }
        })
        .collect();
    let mut config = ModelConfig::new(dim, max_len, num_classes, specs);
    config.filter_widths = widths.to_vec();
    config.filters_per_width = filters;
    let labels = (0..num_classes).map(|k| format!("C{k}")).collect();
    let mut model = CnnModel::new(config, vocab, labels, embedding, rng.gen())?;
    // Non-zero biases so that the bias gradients are exercised.
    for bank in &mut model.conv {
        bank.bias.iter_mut().for_each(|b| *b = rng.gen_range(-0.1..0.1));
    }
    model.fc_bias.iter_mut().for_each(|b| *b = rng.gen_range(-0.1..0.1));
    Ok(model)
}
