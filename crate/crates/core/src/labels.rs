//! Relation label encoding and NONE-instance generation.
//!
//! Sub-tasks that classify given pairs use the six annotated relation names
//! directly, because the direction of each instance is part of the input.
//! Joint extraction and classification needs the direction in the class
//! itself: reverse instances of asymmetric relations become `¬LABEL`, and
//! within-sentence pairs that carry no annotation become `NONE`.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{RelationInstance, Sentence};
use crate::error::{Error, Result};

/// Prefix marking an asymmetric relation read in reverse (U+00AC).
pub const NEGATION: char = '\u{ac}';

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BaseLabel {
    #[serde(rename = "USAGE")]
    Usage,
    #[serde(rename = "RESULT")]
    Result,
    #[serde(rename = "MODEL-FEATURE")]
    ModelFeature,
    #[serde(rename = "PART_WHOLE")]
    PartWhole,
    #[serde(rename = "TOPIC")]
    Topic,
    #[serde(rename = "COMPARE")]
    Compare,
    #[serde(rename = "NONE")]
    None,
}

impl BaseLabel {
    /// The annotated relations, in schema order.
    pub const ANNOTATED: [BaseLabel; 6] = [
        BaseLabel::Usage,
        BaseLabel::Result,
        BaseLabel::ModelFeature,
        BaseLabel::PartWhole,
        BaseLabel::Topic,
        BaseLabel::Compare,
    ];

    /// Every label including `NONE`, in table order.
    pub const ALL: [BaseLabel; 7] = [
        BaseLabel::Usage,
        BaseLabel::Result,
        BaseLabel::ModelFeature,
        BaseLabel::PartWhole,
        BaseLabel::Topic,
        BaseLabel::Compare,
        BaseLabel::None,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BaseLabel::Usage => "USAGE",
            BaseLabel::Result => "RESULT",
            BaseLabel::ModelFeature => "MODEL-FEATURE",
            BaseLabel::PartWhole => "PART_WHOLE",
            BaseLabel::Topic => "TOPIC",
            BaseLabel::Compare => "COMPARE",
            BaseLabel::None => "NONE",
        }
    }

    /// Whether the relation has a direction that can be reversed.
    pub fn is_directional(self) -> bool {
        !matches!(self, BaseLabel::Compare | BaseLabel::None)
    }
}

impl fmt::Display for BaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaseLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaseLabel::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::Label(format!("unknown relation label `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskMode {
    /// Classify annotated pairs into the six base relations.
    #[serde(rename = "classify6")]
    Classify6,
    /// Joint extraction and classification over twelve classes.
    #[serde(rename = "extract12")]
    ExtractClassify12,
}

impl TaskMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskMode::Classify6 => "classify6",
            TaskMode::ExtractClassify12 => "extract12",
        }
    }
}

impl FromStr for TaskMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classify6" | "6" => Ok(TaskMode::Classify6),
            "extract12" | "12" => Ok(TaskMode::ExtractClassify12),
            _ => Err(Error::Config(format!(
                "unknown task mode `{s}` (expected classify6 or extract12)"
            ))),
        }
    }
}

impl fmt::Display for TaskMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RelationSchema {
    pub mode: TaskMode,
}

impl RelationSchema {
    pub fn new(mode: TaskMode) -> Self {
        RelationSchema { mode }
    }

    /// Class strings in model order.
    ///
    /// For the twelve-class problem: the five asymmetric relations, their
    /// five reversed forms, then `COMPARE` and `NONE`.
    pub fn classes(&self) -> Vec<String> {
        match self.mode {
            TaskMode::Classify6 => BaseLabel::ANNOTATED
                .iter()
                .map(|l| l.as_str().to_owned())
                .collect(),
            TaskMode::ExtractClassify12 => {
                let asymmetric = || BaseLabel::ANNOTATED.iter().filter(|l| l.is_directional());
                asymmetric()
                    .map(|l| l.as_str().to_owned())
                    .chain(asymmetric().map(|l| format!("{NEGATION}{l}")))
                    .chain([BaseLabel::Compare, BaseLabel::None].iter().map(|l| l.as_str().to_owned()))
                    .collect()
            }
        }
    }

    /// Whether an instance with this base label belongs to the problem.
    pub fn admits(&self, label: BaseLabel) -> bool {
        self.mode == TaskMode::ExtractClassify12 || label != BaseLabel::None
    }
}

/// Encode an instance label as a class string of `schema`.
pub fn encode_label(instance: &RelationInstance, schema: &RelationSchema) -> Result<String> {
    encode_class(instance.label, instance.reverse, schema)
}

pub fn encode_class(label: BaseLabel, reverse: bool, schema: &RelationSchema) -> Result<String> {
    if reverse && !label.is_directional() {
        return Err(Error::Label(format!("{label} cannot be reversed")));
    }
    if !schema.admits(label) {
        return Err(Error::Label(format!(
            "{label} is not a class of the {} problem",
            schema.mode
        )));
    }
    Ok(match (schema.mode, reverse) {
        (TaskMode::ExtractClassify12, true) => format!("{NEGATION}{label}"),
        _ => label.as_str().to_owned(),
    })
}

/// Inverse of [`encode_class`] for twelve-class strings.
pub fn decode_label(class: &str) -> Result<(BaseLabel, bool)> {
    match class.strip_prefix(NEGATION) {
        Some(rest) => {
            let label: BaseLabel = rest.parse()?;
            if !label.is_directional() {
                return Err(Error::Label(format!("`{class}` is never produced")));
            }
            Ok((label, true))
        }
        None => Ok((class.parse()?, false)),
    }
}

/// Flip the direction of a class string; symmetric classes map to themselves.
pub fn flip_class(class: &str) -> Result<String> {
    let (label, reverse) = decode_label(class)?;
    Ok(if label.is_directional() {
        let schema = RelationSchema::new(TaskMode::ExtractClassify12);
        encode_class(label, !reverse, &schema)?
    } else {
        class.to_owned()
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegativeSamplingConfig {
    /// Maximum number of tokens strictly between the two entity ids.
    pub max_gap: usize,
}

impl Default for NegativeSamplingConfig {
    fn default() -> Self {
        NegativeSamplingConfig { max_gap: 6 }
    }
}

/// Unordered entity pair key.
pub fn pair_key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_owned(), b.to_owned())
    } else {
        (b.to_owned(), a.to_owned())
    }
}

/// Emit `NONE` instances for every unannotated entity pair of `sentence`
/// whose token gap is at most `config.max_gap`.
///
/// `gold_pairs` holds unordered keys (see [`pair_key`]). Pairs come out in
/// surface order with the leftmost entity as `e1`.
pub fn generate_negatives(
    sentence: &Sentence,
    gold_pairs: &HashSet<(String, String)>,
    config: &NegativeSamplingConfig,
) -> Vec<RelationInstance> {
    let positions = sentence.entity_positions();
    let mut negatives = Vec::new();
    for (i, &left) in positions.iter().enumerate() {
        for &right in &positions[i + 1..] {
            let gap = right - left - 1;
            if gap > config.max_gap {
                continue;
            }
            let (e1, e2) = (&sentence.tokens[left], &sentence.tokens[right]);
            if gold_pairs.contains(&pair_key(e1, e2)) {
                continue;
            }
            negatives.push(RelationInstance {
                label: BaseLabel::None,
                e1: e1.clone(),
                e2: e2.clone(),
                reverse: false,
                doc_id: sentence.doc_id.clone(),
                sentence_index: Some(sentence.index),
            });
        }
    }
    negatives
}
