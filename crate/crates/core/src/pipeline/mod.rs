//! Training and evaluation orchestration: class weighting, stratified folds,
//! early stopping, model variants, ensembling and scoring.

mod ensemble;
mod folds;
mod metrics;
mod predict;
mod run;
mod subtask2;
mod training;
mod variants;

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::SdpExample;
use crate::labels::{encode_class, BaseLabel, RelationSchema, TaskMode};

pub use ensemble::{majority_vote, ModelVotes};
pub use folds::{stratified_kfold, FoldRoles, FoldSplit, Protocol};
pub use metrics::{
    class_counts, class_weights, macro_f1, macro_f1_indices, macro_f1_over, BinaryScores, ClassScore,
    EvalReport,
};
pub use predict::{encode_for_model, model_votes, predict_with_ensemble, VoteMode};
pub use run::{
    build_model, cross_validate, run_variant_matrix, write_run, CvConfig, CvResult, CvReport, EmbeddingSets,
    FoldResult, FoldSummary, MatrixCell, VariantMatrix,
};
pub use subtask2::{subtask2_eval, LabeledPair, Subtask2Report};
pub use training::{
    early_stopping_loop, evaluate_macro_f1, predict_classes, train_with_early_stopping, EarlyStopping,
    EpochLog, TrainConfig, TrainOutcome,
};
pub use variants::{ChannelPlan, EmbeddingSet, VariantSpec, VARIANT_NAMES};

/// Write `contents` to a temporary sibling of `path`, then rename it into
/// place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("`{}` is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    {
        let mut file = std::fs::File::create(&tmp)?;
        file.write_all(contents)?;
        file.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Class string of an example under `schema`, or `None` when the schema
/// has no class for it (`NONE` in the six-class problem).
pub fn gold_class(example: &SdpExample, schema: &RelationSchema) -> Result<Option<String>> {
    if !schema.admits(example.label) {
        return Ok(None);
    }
    encode_class(example.label, example.reverse, schema).map(Some)
}

/// Examples usable under `mode` with their gold class indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GoldClasses {
    pub classes: Vec<String>,
    /// Positions in the example list.
    pub kept: Vec<usize>,
    pub gold: Vec<usize>,
}

pub fn gold_classes(examples: &[SdpExample], mode: TaskMode) -> Result<GoldClasses> {
    let schema = RelationSchema::new(mode);
    let classes = schema.classes();
    let index: HashMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let mut kept = Vec::new();
    let mut gold = Vec::new();
    let mut skipped = 0;
    for (i, ex) in examples.iter().enumerate() {
        match gold_class(ex, &schema)? {
            Some(class) => {
                kept.push(i);
                gold.push(index[class.as_str()]);
            }
            None => skipped += 1,
        }
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} examples without a class in the {mode} problem");
    }
    Ok(GoldClasses { classes, kept, gold })
}

/// One line of `predictions.tsv`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub doc_id: String,
    pub e1: String,
    pub e2: String,
    pub label: String,
}

pub const PREDICTION_HEADER: &str = "doc_id\te1\te2\tpredicted";

pub fn write_predictions<W: Write>(rows: &[PredictionRow], mut out: W) -> Result<()> {
    writeln!(out, "{PREDICTION_HEADER}")?;
    for r in rows {
        writeln!(out, "{}\t{}\t{}\t{}", r.doc_id, r.e1, r.e2, r.label)?;
    }
    Ok(())
}

pub fn read_predictions<R: BufRead>(reader: R) -> Result<Vec<PredictionRow>> {
    let mut rows = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || (n == 0 && line == PREDICTION_HEADER) {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::format(n + 1, format!("expected 4 tab-separated fields, found {}", fields.len())));
        }
        rows.push(PredictionRow {
            doc_id: fields[0].into(),
            e1: fields[1].into(),
            e2: fields[2].into(),
            label: fields[3].into(),
        });
    }
    Ok(rows)
}

/// Scores of a prediction file against gold examples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionScores {
    pub mode: TaskMode,
    pub instances: usize,
    pub report: EvalReport,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub subtask2: Option<Subtask2Report>,
}

/// Align `predictions` with `examples` by entity pair and score them.
pub fn score_predictions(
    examples: &[SdpExample],
    predictions: &[PredictionRow],
    mode: TaskMode,
) -> Result<PredictionScores> {
    let gold = gold_classes(examples, mode)?;
    let mut by_pair: HashMap<(&str, &str), &str> = HashMap::new();
    for p in predictions {
        if by_pair.insert((&p.e1, &p.e2), &p.label).is_some() {
            return Err(Error::Data(format!("duplicate prediction for ({}, {})", p.e1, p.e2)));
        }
    }
    let mut gold_labels = Vec::with_capacity(gold.kept.len());
    let mut predicted = Vec::with_capacity(gold.kept.len());
    for (&i, &g) in gold.kept.iter().zip(&gold.gold) {
        let ex = &examples[i];
        let label = by_pair
            .get(&(ex.e1.as_str(), ex.e2.as_str()))
            .ok_or_else(|| Error::Data(format!("no prediction for ({}, {})", ex.e1, ex.e2)))?;
        gold_labels.push(gold.classes[g].clone());
        predicted.push((*label).to_owned());
    }
    let mut report = macro_f1(&gold_labels, &predicted, &gold.classes)?;
    let subtask2 = if mode == TaskMode::ExtractClassify12 {
        let scores = pair_scores(examples, &gold.kept, &gold_labels, &predicted)?;
        report.extraction = Some(scores.extraction);
        Some(scores)
    } else {
        None
    };
    Ok(PredictionScores {
        mode,
        instances: gold_labels.len(),
        report,
        subtask2,
    })
}

pub(crate) fn pair_scores(
    examples: &[SdpExample],
    kept: &[usize],
    gold_labels: &[String],
    predicted: &[String],
) -> Result<Subtask2Report> {
    let none = BaseLabel::None.as_str();
    let mut gold = Vec::new();
    let mut candidates = Vec::new();
    for ((&i, g), p) in kept.iter().zip(gold_labels).zip(predicted) {
        let ex = &examples[i];
        if g != none {
            gold.push(LabeledPair::new(&ex.e1, &ex.e2, g));
        }
        candidates.push(LabeledPair::new(&ex.e1, &ex.e2, p));
    }
    subtask2_eval(&gold, &candidates)
}
