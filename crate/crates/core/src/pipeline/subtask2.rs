use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::metrics::{macro_f1_over, BinaryScores, EvalReport};
use crate::error::{Error, Result};
use crate::labels::{flip_class, pair_key, BaseLabel, RelationSchema, TaskMode};

/// A directed entity pair with a twelve-class label.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub e1: String,
    pub e2: String,
    pub label: String,
}

impl LabeledPair {
    pub fn new(e1: &str, e2: &str, label: &str) -> Self {
        LabeledPair {
            e1: e1.into(),
            e2: e2.into(),
            label: label.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Subtask2Report {
    pub extraction: BinaryScores,
    pub classification: EvalReport,
}

/// Score joint extraction and classification.
///
/// A candidate is extracted when its label is not `NONE` and relevant when
/// its unordered pair carries a gold relation. Classification is scored on
/// candidates that are relevant or extracted, with `NONE` left out of the
/// macro average. Gold labels are flipped when a candidate lists the pair
/// in the opposite order. Gold pairs missing from the candidates count as
/// predicted `NONE`.
pub fn subtask2_eval(gold: &[LabeledPair], candidates: &[LabeledPair]) -> Result<Subtask2Report> {
    let none = BaseLabel::None.as_str();
    let mut gold_by_pair: HashMap<(String, String), &LabeledPair> = HashMap::new();
    for g in gold {
        if g.label == none {
            continue;
        }
        if gold_by_pair.insert(pair_key(&g.e1, &g.e2), g).is_some() {
            return Err(Error::Data(format!("duplicate gold pair ({}, {})", g.e1, g.e2)));
        }
    }

    let mut seen = HashSet::new();
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    let mut gold_labels = Vec::new();
    let mut predicted = Vec::new();
    for c in candidates {
        let key = pair_key(&c.e1, &c.e2);
        if !seen.insert(key.clone()) {
            return Err(Error::Data(format!("duplicate candidate pair ({}, {})", c.e1, c.e2)));
        }
        let extracted = c.label != none;
        let gold_label = match gold_by_pair.get(&key) {
            Some(g) if g.e1 == c.e1 => Some(g.label.clone()),
            Some(g) => Some(flip_class(&g.label)?),
            None => None,
        };
        match (extracted, gold_label.is_some()) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => continue,
        }
        gold_labels.push(gold_label.unwrap_or_else(|| none.to_owned()));
        predicted.push(c.label.clone());
    }
    for (key, g) in &gold_by_pair {
        if !seen.contains(key) {
            fn_ += 1;
            gold_labels.push(g.label.clone());
            predicted.push(none.to_owned());
        }
    }

    let labels = RelationSchema::new(TaskMode::ExtractClassify12).classes();
    let scored: Vec<String> = labels.iter().filter(|l| *l != none).cloned().collect();
    let classification = macro_f1_over(&gold_labels, &predicted, &labels, &scored)?;
    Ok(Subtask2Report {
        extraction: BinaryScores::from_counts(tp, fp, fn_),
        classification,
    })
}
