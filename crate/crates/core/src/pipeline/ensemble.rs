use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};

/// One model's output on a shared instance list.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelVotes {
    /// Class names in the order of the probability vectors.
    pub labels: Vec<String>,
    pub predictions: Vec<String>,
    pub probabilities: Vec<Vec<f64>>,
}

impl ModelVotes {
    /// Votes from probability vectors: every prediction is the first argmax.
    pub fn from_probabilities(labels: Vec<String>, probabilities: Vec<Vec<f64>>) -> Self {
        let predictions = probabilities
            .iter()
            .map(|p| labels[crate::cnn::argmax(p)].clone())
            .collect();
        ModelVotes {
            labels,
            predictions,
            probabilities,
        }
    }
}

/// Per-instance majority vote.
///
/// Ties go to the label with the largest probability mass summed over all
/// models, then to the lexicographically smallest label.
pub fn majority_vote(models: &[ModelVotes]) -> Result<Vec<String>> {
    let first = models
        .first()
        .ok_or_else(|| Error::Config("majority vote needs at least one model".into()))?;
    let label_set: BTreeSet<&String> = first.labels.iter().collect();
    let n = first.predictions.len();
    let mut positions: Vec<HashMap<&str, usize>> = Vec::with_capacity(models.len());
    for (m, model) in models.iter().enumerate() {
        if model.labels.iter().collect::<BTreeSet<_>>() != label_set || model.labels.len() != label_set.len() {
            return Err(Error::Data(format!("model {m} has a different label set")));
        }
        if model.predictions.len() != n || model.probabilities.len() != n {
            return Err(Error::Shape(format!("model {m} covers a different number of instances")));
        }
        if model.probabilities.iter().any(|p| p.len() != model.labels.len()) {
            return Err(Error::Shape(format!("model {m} has malformed probability vectors")));
        }
        if let Some(bad) = model.predictions.iter().find(|p| !label_set.contains(p)) {
            return Err(Error::Label(format!("model {m} predicts unknown label `{bad}`")));
        }
        positions.push(model.labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect());
    }

    let mut result = Vec::with_capacity(n);
    for i in 0..n {
        let mut votes: BTreeMap<&str, usize> = BTreeMap::new();
        for model in models {
            *votes.entry(model.predictions[i].as_str()).or_default() += 1;
        }
        let top = *votes.values().max().expect("at least one vote");
        let tied: Vec<&str> = votes.iter().filter(|(_, &v)| v == top).map(|(&l, _)| l).collect();
        let winner = if tied.len() == 1 {
            tied[0]
        } else {
            let mass = |label: &str| -> f64 {
                models
                    .iter()
                    .zip(&positions)
                    .map(|(m, pos)| m.probabilities[i][pos[label]])
                    .sum()
            };
            // `tied` is sorted, and only a strictly larger mass displaces
            // the current choice.
            let mut best = tied[0];
            let mut best_mass = mass(best);
            for &label in &tied[1..] {
                let m = mass(label);
                if m > best_mass {
                    best = label;
                    best_mass = m;
                }
            }
            best
        };
        result.push(winner.to_owned());
    }
    Ok(result)
}
