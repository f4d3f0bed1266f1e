use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::{stratified_kfold, FoldRoles, FoldSplit, Protocol};
use super::metrics::{class_counts, class_weights, macro_f1, macro_f1_indices, EvalReport};
use super::subtask2::Subtask2Report;
use super::training::{train_with_early_stopping, EpochLog, TrainConfig};
use super::variants::{EmbeddingSet, VariantSpec};
use super::{gold_classes, pair_scores, write_atomic, write_predictions, PredictionRow};
use crate::cnn::{argmax, save_model, ChannelSpec, CnnModel, Example, ModelConfig};
use crate::embeddings::{build_channel, lookup_sequence, CoverageReport, PretrainedVectors, Vocabulary};
use crate::error::{Error, Result};
use crate::extract::SdpExample;
use crate::labels::TaskMode;

/// Pretrained vector sets available to the variants.
#[derive(Clone, Debug, Default)]
pub struct EmbeddingSets {
    pub wiki: Option<PretrainedVectors>,
    pub acl: Option<PretrainedVectors>,
}

impl EmbeddingSets {
    pub fn get(&self, set: EmbeddingSet) -> Result<Option<&PretrainedVectors>> {
        let (slot, flag) = match set {
            EmbeddingSet::Random => return Ok(None),
            EmbeddingSet::Wiki => (&self.wiki, "--wiki-embeddings"),
            EmbeddingSet::Acl => (&self.acl, "--acl-embeddings"),
        };
        slot.as_ref()
            .map(Some)
            .ok_or_else(|| Error::Config(format!("variant needs {set:?} vectors; pass {flag}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub mode: TaskMode,
    pub folds: usize,
    pub seed: u64,
    pub protocol: Protocol,
    /// Dimension of randomly initialized variants; pretrained variants use
    /// the dimension of their vectors.
    pub embedding_dim: usize,
    pub filter_widths: Vec<usize>,
    pub filters_per_width: usize,
    pub dropout: f64,
    pub norm_cap: f64,
    pub train: TrainConfig,
    /// Folds trained concurrently.
    pub jobs: usize,
}

impl CvConfig {
    pub fn new(mode: TaskMode) -> Self {
        let defaults = ModelConfig::new(300, 5, 2, Vec::new());
        CvConfig {
            mode,
            folds: 5,
            seed: 0,
            protocol: Protocol::Development,
            embedding_dim: 300,
            filter_widths: defaults.filter_widths,
            filters_per_width: defaults.filters_per_width,
            dropout: defaults.dropout,
            norm_cap: defaults.norm_cap,
            train: TrainConfig::default(),
            jobs: 1,
        }
    }
}

/// Fresh model for `variant` over `vocab`. Channel and weight seeds are
/// drawn from `seed`.
pub fn build_model(
    variant: &VariantSpec,
    embeddings: &EmbeddingSets,
    vocab: Vocabulary,
    max_len: usize,
    classes: Vec<String>,
    config: &CvConfig,
    seed: u64,
) -> Result<(CnnModel<f32>, Vec<CoverageReport>)> {
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let mut dim = None;
    for plan in &variant.channels {
        if let Some(p) = embeddings.get(plan.init)? {
            match dim {
                Some(d) if d != p.dim => {
                    return Err(Error::Config("pretrained channels differ in dimension".into()))
                }
                _ => dim = Some(p.dim),
            }
        }
    }
    let dim = dim.unwrap_or(config.embedding_dim);
    let mut channels = Vec::new();
    let mut specs = Vec::new();
    let mut coverage = Vec::new();
    for plan in &variant.channels {
        let pretrained = embeddings.get(plan.init)?;
        let (channel, report) = build_channel(&vocab, pretrained, dim, plan.trainable, seeds.gen())?;
        specs.push(ChannelSpec {
            source: channel.source.clone(),
            trainable: plan.trainable,
        });
        channels.push(channel);
        coverage.push(report);
    }
    let mut model_config = ModelConfig::new(dim, max_len, classes.len(), specs);
    model_config.filter_widths = config.filter_widths.clone();
    model_config.filters_per_width = config.filters_per_width;
    model_config.dropout = config.dropout;
    model_config.norm_cap = config.norm_cap;
    let model = CnnModel::new(model_config, vocab, classes, channels, seeds.gen())?;
    Ok((model, coverage))
}

#[derive(Clone, Debug)]
pub struct FoldResult {
    pub fold: usize,
    pub roles: FoldRoles,
    pub best_epoch: usize,
    pub dev_macro_f1: f64,
    /// Macro-F1 on the held-out fold (the test fold under the development
    /// protocol, the development fold otherwise).
    pub held_out_macro_f1: f64,
    /// Positions (in the kept example list) of the held-out fold.
    pub held_out: Vec<usize>,
    pub held_out_predictions: Vec<usize>,
    pub log: Vec<EpochLog>,
    pub model: CnnModel<f32>,
    pub coverage: Vec<CoverageReport>,
}

#[derive(Clone, Debug)]
pub struct CvResult {
    pub variant: VariantSpec,
    pub classes: Vec<String>,
    /// Positions in the input example list of the examples used.
    pub kept: Vec<usize>,
    pub split: FoldSplit,
    pub folds: Vec<FoldResult>,
    pub report: CvReport,
    /// Out-of-fold prediction for every kept example.
    pub predictions: Vec<PredictionRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldSummary {
    pub fold: usize,
    pub train_folds: Vec<usize>,
    pub dev_fold: usize,
    pub test_fold: Option<usize>,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub max_len: usize,
    pub vocab_size: usize,
    pub dev_macro_f1: f64,
    pub held_out_macro_f1: f64,
    pub coverage: Vec<CoverageReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub variant: String,
    pub mode: TaskMode,
    pub protocol: Protocol,
    pub k: usize,
    pub seed: u64,
    pub instances: usize,
    pub classes: Vec<String>,
    pub class_counts: Vec<usize>,
    pub folds: Vec<FoldSummary>,
    pub mean_dev_macro_f1: f64,
    /// Scores of the pooled out-of-fold predictions.
    pub held_out: EvalReport,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub subtask2: Option<Subtask2Report>,
}

fn to_examples(
    vocab: &Vocabulary,
    examples: &[SdpExample],
    positions: &[usize],
    kept: &[usize],
    gold: &[usize],
    max_len: usize,
) -> Vec<Example> {
    positions
        .iter()
        .map(|&p| Example {
            indices: lookup_sequence(vocab, &examples[kept[p]].model_tokens, max_len).0,
            gold: gold[p],
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn run_fold(
    fold: usize,
    split: &FoldSplit,
    examples: &[SdpExample],
    kept: &[usize],
    gold: &[usize],
    classes: &[String],
    variant: &VariantSpec,
    embeddings: &EmbeddingSets,
    config: &CvConfig,
) -> Result<FoldResult> {
    let roles = split.roles(fold, config.protocol);
    let train_pos = split.indices(&roles.train);
    let dev_pos = split.indices(&[roles.dev]);
    let held_pos = split.indices(&[roles.held_out()]);
    let fold_seed = config.seed.wrapping_add(fold as u64);

    let train_tokens: Vec<&[String]> = train_pos
        .iter()
        .map(|&p| examples[kept[p]].model_tokens.as_slice())
        .collect();
    let vocab = Vocabulary::build(train_tokens.iter().copied());
    let widest = config.filter_widths.iter().copied().max().unwrap_or(1);
    let max_len = train_tokens.iter().map(|t| t.len()).max().unwrap_or(0).max(widest);

    let k = classes.len();
    let train_gold: Vec<usize> = train_pos.iter().map(|&p| gold[p]).collect();
    let counts = class_counts(&train_gold, k);
    // Classes absent from the training folds keep unit weight.
    let present: Vec<usize> = counts.iter().copied().filter(|&n| n > 0).collect();
    let present_weights = class_weights(&present)?;
    let mut it = present_weights.into_iter();
    let weights: Vec<f32> = counts
        .iter()
        .map(|&n| if n > 0 { it.next().expect("one per present class") as f32 } else { 1.0 })
        .collect();

    let (model, coverage) = build_model(variant, embeddings, vocab, max_len, classes.to_vec(), config, fold_seed)?;
    let train = to_examples(&model.vocab, examples, &train_pos, kept, gold, max_len);
    let dev = to_examples(&model.vocab, examples, &dev_pos, kept, gold, max_len);
    let held = to_examples(&model.vocab, examples, &held_pos, kept, gold, max_len);

    log::info!(
        "fold {fold}: {} train / {} dev / {} held-out, vocabulary {}, length {max_len}",
        train.len(),
        dev.len(),
        held.len(),
        model.vocab.len()
    );
    let train_config = TrainConfig {
        seed: fold_seed,
        ..config.train.clone()
    };
    let outcome = train_with_early_stopping(model, &train, &dev, &weights, &train_config)?;
    let seqs: Vec<Vec<usize>> = held.iter().map(|e| e.indices.clone()).collect();
    let held_out_predictions: Vec<usize> = outcome.model.predict_proba(&seqs)?.iter().map(|p| argmax(p)).collect();
    let held_gold: Vec<usize> = held.iter().map(|e| e.gold).collect();
    Ok(FoldResult {
        fold,
        best_epoch: outcome.best_epoch,
        dev_macro_f1: outcome.best_dev_macro_f1,
        held_out_macro_f1: macro_f1_indices(&held_gold, &held_out_predictions, k)?,
        roles,
        held_out: held_pos,
        held_out_predictions,
        log: outcome.log,
        model: outcome.model,
        coverage,
    })
}

/// Stratified k-fold training and evaluation of one variant.
///
/// Fold `i` uses seed `seed + i`; its vocabulary and sequence length come
/// from its training folds only.
pub fn cross_validate(
    examples: &[SdpExample],
    variant: &VariantSpec,
    embeddings: &EmbeddingSets,
    config: &CvConfig,
) -> Result<CvResult> {
    let gold = gold_classes(examples, config.mode)?;
    if gold.kept.is_empty() {
        return Err(Error::Data("no usable examples".into()));
    }
    let split = stratified_kfold(&gold.gold, config.folds, config.seed)?;
    if config.protocol == Protocol::Development && config.folds < 3 {
        return Err(Error::Config("the development protocol needs at least 3 folds".into()));
    }

    let fold = |i: usize| {
        run_fold(i, &split, examples, &gold.kept, &gold.gold, &gold.classes, variant, embeddings, config)
    };
    let folds: Vec<FoldResult> = if config.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| (0..config.folds).into_par_iter().map(fold).collect::<Result<Vec<_>>>())?
    } else {
        (0..config.folds).map(fold).collect::<Result<Vec<_>>>()?
    };

    // Every kept example is held out exactly once.
    let mut out_of_fold = vec![0usize; gold.kept.len()];
    for f in &folds {
        for (&p, &c) in f.held_out.iter().zip(&f.held_out_predictions) {
            out_of_fold[p] = c;
        }
    }
    let gold_labels: Vec<String> = gold.gold.iter().map(|&g| gold.classes[g].clone()).collect();
    let predicted: Vec<String> = out_of_fold.iter().map(|&c| gold.classes[c].clone()).collect();
    let mut held_out = macro_f1(&gold_labels, &predicted, &gold.classes)?;
    let subtask2 = if config.mode == TaskMode::ExtractClassify12 {
        let scores = pair_scores(examples, &gold.kept, &gold_labels, &predicted)?;
        held_out.extraction = Some(scores.extraction);
        Some(scores)
    } else {
        None
    };

    let summaries = folds
        .iter()
        .map(|f| FoldSummary {
            fold: f.fold,
            train_folds: f.roles.train.clone(),
            dev_fold: f.roles.dev,
            test_fold: f.roles.test,
            best_epoch: f.best_epoch,
            epochs_run: f.log.len(),
            max_len: f.model.config.max_len,
            vocab_size: f.model.vocab.len(),
            dev_macro_f1: f.dev_macro_f1,
            held_out_macro_f1: f.held_out_macro_f1,
            coverage: f.coverage.clone(),
        })
        .collect();
    let mean_dev_macro_f1 = folds.iter().map(|f| f.dev_macro_f1).sum::<f64>() / folds.len() as f64;
    let report = CvReport {
        variant: variant.name.clone(),
        mode: config.mode,
        protocol: config.protocol,
        k: config.folds,
        seed: config.seed,
        instances: gold.kept.len(),
        classes: gold.classes.clone(),
        class_counts: class_counts(&gold.gold, gold.classes.len()),
        folds: summaries,
        mean_dev_macro_f1,
        held_out,
        subtask2,
    };
    let predictions = gold
        .kept
        .iter()
        .zip(&predicted)
        .map(|(&i, label)| PredictionRow {
            doc_id: examples[i].doc_id.clone(),
            e1: examples[i].e1.clone(),
            e2: examples[i].e2.clone(),
            label: label.clone(),
        })
        .collect();
    Ok(CvResult {
        variant: variant.clone(),
        classes: gold.classes,
        kept: gold.kept,
        split,
        folds,
        report,
        predictions,
    })
}

#[derive(Serialize)]
struct FoldsFile<'a> {
    k: usize,
    seed: u64,
    protocol: Protocol,
    /// Example line numbers (0-based) of each fold.
    folds: Vec<Vec<usize>>,
    roles: Vec<&'a FoldRoles>,
}

/// Write `folds.json`, the fold models and logs, `report.json` and
/// `predictions.tsv` under `dir`.
pub fn write_run(dir: &Path, result: &CvResult) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let folds = FoldsFile {
        k: result.split.k,
        seed: result.split.seed,
        protocol: result.report.protocol,
        folds: result
            .split
            .folds
            .iter()
            .map(|f| f.iter().map(|&p| result.kept[p]).collect())
            .collect(),
        roles: result.folds.iter().map(|f| &f.roles).collect(),
    };
    write_atomic(&dir.join("folds.json"), &serde_json::to_vec_pretty(&folds)?)?;
    for f in &result.folds {
        let mut model = Vec::new();
        save_model(&f.model, &mut model)?;
        write_atomic(&dir.join(format!("model_fold{}.sdprel", f.fold)), &model)?;
        let mut log = Vec::new();
        for entry in &f.log {
            serde_json::to_writer(&mut log, entry)?;
            log.push(b'\n');
        }
        write_atomic(&dir.join(format!("log_fold{}.jsonl", f.fold)), &log)?;
    }
    let mut report = serde_json::to_vec_pretty(&result.report)?;
    report.push(b'\n');
    write_atomic(&dir.join("report.json"), &report)?;
    let mut predictions = Vec::new();
    write_predictions(&result.predictions, &mut predictions)?;
    write_atomic(&dir.join("predictions.tsv"), &predictions)?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixCell {
    pub variant: String,
    pub representation: String,
    pub mean_dev_macro_f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantMatrix {
    pub cells: Vec<MatrixCell>,
}

impl VariantMatrix {
    /// Tab-separated table: one row per variant, one column per
    /// representation.
    pub fn to_tsv(&self) -> String {
        let mut reps: Vec<&str> = Vec::new();
        let mut variants: Vec<&str> = Vec::new();
        for c in &self.cells {
            if !reps.contains(&c.representation.as_str()) {
                reps.push(&c.representation);
            }
            if !variants.contains(&c.variant.as_str()) {
                variants.push(&c.variant);
            }
        }
        let mut out = String::from("variant");
        for r in &reps {
            out.push('\t');
            out.push_str(r);
        }
        out.push('\n');
        for v in variants {
            out.push_str(v);
            for r in &reps {
                let cell = self.cells.iter().find(|c| c.variant == v && c.representation == *r);
                out.push('\t');
                if let Some(c) = cell {
                    out.push_str(&format!("{:.4}", c.mean_dev_macro_f1));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Mean development macro-F1 of every (variant, representation) pair.
pub fn run_variant_matrix(
    representations: &[(String, Vec<SdpExample>)],
    variants: &[VariantSpec],
    embeddings: &EmbeddingSets,
    config: &CvConfig,
) -> Result<VariantMatrix> {
    let mut cells = Vec::new();
    for variant in variants {
        for (name, examples) in representations {
            log::info!("cross-validating {variant} on {name}");
            let result = cross_validate(examples, variant, embeddings, config)?;
            cells.push(MatrixCell {
                variant: variant.name.clone(),
                representation: name.clone(),
                mean_dev_macro_f1: result.report.mean_dev_macro_f1,
            });
        }
    }
    Ok(VariantMatrix { cells })
}
