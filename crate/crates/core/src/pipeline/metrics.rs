use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inverse-frequency weights `w_c = N / (K · n_c)`.
pub fn class_weights(counts: &[usize]) -> Result<Vec<f64>> {
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::Data(format!("class {c} has no training instances")));
    }
    let total: usize = counts.iter().sum();
    let k = counts.len() as f64;
    Ok(counts.iter().map(|&n| total as f64 / (k * n as f64)).collect())
}

/// Number of instances of each of `k` classes.
pub fn class_counts(gold: &[usize], k: usize) -> Vec<usize> {
    let mut counts = vec![0; k];
    for &g in gold {
        counts[g] += 1;
    }
    counts
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold instances of the class.
    pub support: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl BinaryScores {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let (precision, recall, f1) = prf(tp, fp, fn_);
        BinaryScores {
            precision,
            recall,
            f1,
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn prf(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    let p = ratio(tp, tp + fp);
    let r = ratio(tp, tp + fn_);
    let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Scores of the classes entering the macro average.
    pub classes: Vec<ClassScore>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// Row and column labels of `confusion`.
    pub labels: Vec<String>,
    /// `confusion[gold][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    /// Present for joint extraction and classification.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub extraction: Option<BinaryScores>,
}

/// Per-class and macro-averaged scores over `classes`.
pub fn macro_f1<S: AsRef<str>>(gold: &[S], predicted: &[S], classes: &[String]) -> Result<EvalReport> {
    macro_f1_over(gold, predicted, classes, classes)
}

/// Like [`macro_f1`], but labels may range over `labels` while only
/// `scored` enters the macro average.
pub fn macro_f1_over<S: AsRef<str>>(
    gold: &[S],
    predicted: &[S],
    labels: &[String],
    scored: &[String],
) -> Result<EvalReport> {
    if gold.len() != predicted.len() {
        return Err(Error::Data(format!(
            "{} gold labels but {} predictions",
            gold.len(),
            predicted.len()
        )));
    }
    let index: HashMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let lookup = |s: &str| {
        index
            .get(s)
            .copied()
            .ok_or_else(|| Error::Label(format!("label `{s}` outside the class set")))
    };
    let mut confusion = vec![vec![0usize; labels.len()]; labels.len()];
    for (g, p) in gold.iter().zip(predicted) {
        confusion[lookup(g.as_ref())?][lookup(p.as_ref())?] += 1;
    }
    let mut classes = Vec::with_capacity(scored.len());
    for label in scored {
        let c = lookup(label)?;
        let tp = confusion[c][c];
        let support: usize = confusion[c].iter().sum();
        let predicted_c: usize = confusion.iter().map(|row| row[c]).sum();
        let (precision, recall, f1) = prf(tp, predicted_c - tp, support - tp);
        classes.push(ClassScore {
            label: label.clone(),
            precision,
            recall,
            f1,
            support,
        });
    }
    let mean = |f: fn(&ClassScore) -> f64| {
        if classes.is_empty() {
            0.0
        } else {
            classes.iter().map(f).sum::<f64>() / classes.len() as f64
        }
    };
    Ok(EvalReport {
        macro_precision: mean(|c| c.precision),
        macro_recall: mean(|c| c.recall),
        macro_f1: mean(|c| c.f1),
        classes,
        labels: labels.to_vec(),
        confusion,
        extraction: None,
    })
}

/// Macro-F1 of class indices over `k` classes.
pub fn macro_f1_indices(gold: &[usize], predicted: &[usize], k: usize) -> Result<f64> {
    let names: Vec<String> = (0..k).map(|c| c.to_string()).collect();
    let g: Vec<&str> = gold.iter().map(|&c| names.get(c).map_or("?", String::as_str)).collect();
    let p: Vec<&str> = predicted.iter().map(|&c| names.get(c).map_or("?", String::as_str)).collect();
    Ok(macro_f1(&g, &p, &names)?.macro_f1)
}
