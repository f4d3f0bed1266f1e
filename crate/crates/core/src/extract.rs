//! SDP example files: one rendered path per relation instance.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::Dataset;
use crate::depgraph::{render_sdp, shortest_dependency_path, DependencyGraph};
use crate::error::{Error, Result};
use crate::labels::BaseLabel;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SdpExample {
    pub doc_id: String,
    pub sentence_index: usize,
    pub e1: String,
    pub e2: String,
    pub label: BaseLabel,
    pub reverse: bool,
    pub path_string: String,
    pub model_tokens: Vec<String>,
}

/// Extract and render the path of every dataset instance. `graphs` is
/// aligned with `dataset.sentences`.
pub fn extract_examples(dataset: &Dataset, graphs: &[DependencyGraph]) -> Result<Vec<SdpExample>> {
    if graphs.len() != dataset.sentences.len() {
        return Err(Error::Data(format!(
            "{} graphs for {} sentences",
            graphs.len(),
            dataset.sentences.len()
        )));
    }
    dataset
        .instances
        .iter()
        .zip(&dataset.instance_sentences)
        .map(|(instance, &pos)| {
            let graph = &graphs[pos];
            let node = |id: &str| {
                graph.find_form(id).ok_or_else(|| {
                    Error::Data(format!("entity `{id}` missing from parse of sentence {pos}"))
                })
            };
            let path = shortest_dependency_path(graph, node(&instance.e1)?, node(&instance.e2)?)?;
            let rendered = render_sdp(&path, graph, &dataset.entities)?;
            Ok(SdpExample {
                doc_id: instance.doc_id.clone(),
                sentence_index: dataset.sentences[pos].index,
                e1: instance.e1.clone(),
                e2: instance.e2.clone(),
                label: instance.label,
                reverse: instance.reverse,
                path_string: rendered.path_string,
                model_tokens: rendered.model_tokens,
            })
        })
        .collect()
}

pub fn write_examples<W: Write>(examples: &[SdpExample], mut out: W) -> Result<()> {
    for example in examples {
        writeln!(out, "{}", serde_json::to_string(example)?)?;
    }
    Ok(())
}

pub fn read_examples<R: BufRead>(reader: R) -> Result<Vec<SdpExample>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let example: SdpExample = serde_json::from_str(&line)
            .map_err(|e| Error::format(i + 1, format!("SDP example: {e}")))?;
        if example.reverse && !example.label.is_directional() {
            return Err(Error::format(i + 1, format!("{} cannot be reversed", example.label)));
        }
        if example.model_tokens.is_empty() {
            return Err(Error::format(i + 1, "SDP example without model tokens"));
        }
        out.push(example);
    }
    Ok(out)
}
