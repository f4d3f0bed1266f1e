use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::macro_f1_indices;
use crate::cnn::{adam_step, argmax, sample_dropout_mask, AdamConfig, CnnModel, Example, TrainState};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 50,
            adam: AdamConfig::default(),
            max_epochs: 100,
            patience: 20,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_macro_f1: f64,
    pub improved: bool,
}

/// Patience counter over a score that must strictly improve.
#[derive(Clone, Debug)]
pub struct EarlyStopping {
    patience: usize,
    best: Option<f64>,
    best_epoch: usize,
    stale: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best: None,
            best_epoch: 0,
            stale: 0,
        }
    }

    /// Record the score of `epoch`; returns whether it is a new best.
    pub fn observe(&mut self, epoch: usize, score: f64) -> bool {
        let improved = match self.best {
            None => !score.is_nan(),
            Some(best) => score > best,
        };
        if improved {
            self.best = Some(score);
            self.best_epoch = epoch;
            self.stale = 0;
        } else {
            self.stale += 1;
        }
        improved
    }

    pub fn should_stop(&self) -> bool {
        self.stale >= self.patience
    }

    pub fn best(&self) -> Option<f64> {
        self.best
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

/// Run epochs (numbered from 1) until the patience runs out or
/// `max_epochs` is reached; return the state snapshot of the best epoch.
///
/// `epoch` advances the state by one epoch and returns `(loss, score)`.
pub fn early_stopping_loop<M, G>(
    mut state: M,
    max_epochs: usize,
    patience: usize,
    mut epoch: G,
) -> Result<(M, Vec<EpochLog>, usize)>
where
    M: Clone,
    G: FnMut(&mut M, usize) -> Result<(f64, f64)>,
{
    if max_epochs == 0 {
        return Err(Error::Config("max_epochs must be positive".into()));
    }
    let mut stopper = EarlyStopping::new(patience);
    let mut best = state.clone();
    let mut log = Vec::new();
    for e in 1..=max_epochs {
        let (train_loss, score) = epoch(&mut state, e)?;
        let improved = stopper.observe(e, score);
        if improved {
            best = state.clone();
        }
        log::info!("epoch {e}: loss {train_loss:.5}, dev macro-F1 {score:.4}{}", if improved { " *" } else { "" });
        log.push(EpochLog {
            epoch: e,
            train_loss,
            dev_macro_f1: score,
            improved,
        });
        if stopper.should_stop() {
            break;
        }
    }
    Ok((best, log, stopper.best_epoch()))
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: CnnModel<f32>,
    pub log: Vec<EpochLog>,
    pub best_epoch: usize,
    pub best_dev_macro_f1: f64,
}

/// Evaluation-mode predictions (first argmax).
pub fn predict_classes(model: &CnnModel<f32>, examples: &[Example]) -> Result<Vec<usize>> {
    let seqs: Vec<Vec<usize>> = examples.iter().map(|e| e.indices.clone()).collect();
    Ok(model.predict_proba(&seqs)?.iter().map(|p| argmax(p)).collect())
}

/// Macro-F1 of `model` on `examples` over all model classes.
pub fn evaluate_macro_f1(model: &CnnModel<f32>, examples: &[Example]) -> Result<f64> {
    let predicted = predict_classes(model, examples)?;
    let gold: Vec<usize> = examples.iter().map(|e| e.gold).collect();
    macro_f1_indices(&gold, &predicted, model.config.num_classes)
}

/// Mini-batch Adam with dropout; early stopping on development macro-F1.
pub fn train_with_early_stopping(
    model: CnnModel<f32>,
    train: &[Example],
    dev: &[Example],
    class_weights: &[f32],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    if train.is_empty() {
        return Err(Error::Data("empty training set".into()));
    }
    if dev.is_empty() {
        return Err(Error::Data("empty development set".into()));
    }
    let k = model.config.num_classes;
    if let Some(e) = train.iter().chain(dev).find(|e| e.gold >= k) {
        return Err(Error::Label(format!("gold class {} outside the {k} model classes", e.gold)));
    }
    if class_weights.len() != k {
        return Err(Error::Shape(format!("{} class weights for {k} classes", class_weights.len())));
    }
    if config.batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let hidden = model.config.hidden_size();
    let rate = model.config.dropout;
    let state = (model.clone(), TrainState::new(&model));
    let mut order: Vec<usize> = (0..train.len()).collect();

    let ((best, _), log, best_epoch) =
        early_stopping_loop(state, config.max_epochs, config.patience, |(model, opt), _| {
            order.shuffle(&mut rng);
            let mut total = 0.0f64;
            for chunk in order.chunks(config.batch_size) {
                let batch: Vec<Example> = chunk.iter().map(|&i| train[i].clone()).collect();
                let masks = (0..batch.len())
                    .map(|_| sample_dropout_mask(&mut rng, hidden, rate))
                    .collect();
                let (loss, grads) = model.batch_gradients(&batch, class_weights, Some(masks))?;
                adam_step(model, opt, &grads, &config.adam)?;
                total += loss as f64 * batch.len() as f64;
            }
            let score = evaluate_macro_f1(model, dev)?;
            Ok((total / train.len() as f64, score))
        })?;
    let best_dev_macro_f1 = log
        .iter()
        .find(|l| l.epoch == best_epoch)
        .map_or(0.0, |l| l.dev_macro_f1);
    Ok(TrainOutcome {
        model: best,
        log,
        best_epoch,
        best_dev_macro_f1,
    })
}
