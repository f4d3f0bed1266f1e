use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ensemble::{majority_vote, ModelVotes};
use crate::cnn::CnnModel;
use crate::embeddings::lookup_sequence;
use crate::error::{Error, Result};
use crate::extract::SdpExample;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VoteMode {
    /// Majority vote over all models.
    Majority,
    /// The model at this position alone.
    Single(usize),
}

impl FromStr for VoteMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "mv" {
            return Ok(VoteMode::Majority);
        }
        s.strip_prefix("single:")
            .and_then(|i| i.parse().ok())
            .map(VoteMode::Single)
            .ok_or_else(|| Error::Config(format!("vote mode `{s}` is neither `mv` nor `single:<i>`")))
    }
}

impl fmt::Display for VoteMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VoteMode::Majority => f.write_str("mv"),
            VoteMode::Single(i) => write!(f, "single:{i}"),
        }
    }
}

/// Index sequences of `examples` in the model's vocabulary and length.
pub fn encode_for_model(model: &CnnModel<f32>, examples: &[SdpExample]) -> Vec<Vec<usize>> {
    examples
        .iter()
        .map(|e| lookup_sequence(&model.vocab, &e.model_tokens, model.config.max_len).0)
        .collect()
}

pub fn model_votes(model: &CnnModel<f32>, examples: &[SdpExample]) -> Result<ModelVotes> {
    let probabilities = model
        .predict_proba(&encode_for_model(model, examples))?
        .into_iter()
        .map(|p| p.into_iter().map(f64::from).collect())
        .collect();
    Ok(ModelVotes::from_probabilities(model.labels.clone(), probabilities))
}

/// Predicted class of every example under `mode`.
pub fn predict_with_ensemble(
    models: &[CnnModel<f32>],
    examples: &[SdpExample],
    mode: VoteMode,
) -> Result<Vec<String>> {
    let first = models
        .first()
        .ok_or_else(|| Error::Config("at least one model is required".into()))?;
    let mut reference = first.labels.clone();
    reference.sort();
    for (i, m) in models.iter().enumerate().skip(1) {
        let mut labels = m.labels.clone();
        labels.sort();
        if labels != reference {
            return Err(Error::Data(format!("model {i} has a different label set than model 0")));
        }
    }
    match mode {
        VoteMode::Single(i) => {
            let model = models.get(i).ok_or_else(|| {
                Error::Config(format!("single:{i} requested but only {} models given", models.len()))
            })?;
            Ok(model_votes(model, examples)?.predictions)
        }
        VoteMode::Majority => {
            let votes = models
                .iter()
                .map(|m| model_votes(m, examples))
                .collect::<Result<Vec<_>>>()?;
            majority_vote(&votes)
        }
    }
}
